try:
    from fswel._fswel import *  # noqa: F401,F403
    from fswel._fswel import version
except ImportError:  # pragma: no cover - in-tree builds place the module flat
    from _fswel import *  # noqa: F401,F403
    from _fswel import version

__version__ = version()
