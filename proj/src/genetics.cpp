#include "fswel/genetics.hpp"

namespace fswel::genetics {

bool valid_genotype(int g) noexcept { return g >= 0 && g <= 2; }

std::string proxy_kind_name(ProxyKind kind) {
    switch (kind) {
        case ProxyKind::None: return "none";
        case ProxyKind::SpouseChild: return "spouse_child";
        case ProxyKind::OneParent: return "one_parent";
        case ProxyKind::TwoParents: return "two_parents";
        case ProxyKind::ChildOnly: return "child_only";
    }
    return "none";
}

namespace {

void require_genotype(int g, const char* what) {
    if (!valid_genotype(g)) {
        throw InvariantViolation(std::string("family proxy field out of range: ") + what);
    }
}

}  // namespace

FamilyProxy FamilyProxy::spouse_child(int gs, int gc) {
    require_genotype(gs, "spouse");
    require_genotype(gc, "child");
    return {ProxyKind::SpouseChild, gs, gc};
}

FamilyProxy FamilyProxy::one_parent(int gp) {
    require_genotype(gp, "parent");
    return {ProxyKind::OneParent, gp, -1};
}

FamilyProxy FamilyProxy::two_parents(int gm, int gf) {
    require_genotype(gm, "mother");
    require_genotype(gf, "father");
    return {ProxyKind::TwoParents, gm, gf};
}

FamilyProxy FamilyProxy::child_only(int gc) {
    require_genotype(gc, "child");
    return {ProxyKind::ChildOnly, gc, -1};
}

GenotypeDist hwe_probs(double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) {
        throw InvariantViolation("allele frequency outside [0,1]");
    }
    GenotypeDist d;
    d[0] = (1.0 - theta) * (1.0 - theta);
    d[1] = 2.0 * theta * (1.0 - theta);
    d[2] = theta * theta;
    return d;
}

GenotypeDist transmission(int gm, int gf) {
    require_genotype(gm, "parent");
    require_genotype(gf, "parent");
    // Each parent passes its minor allele with probability g/2.
    const double pm = gm / 2.0;
    const double pf = gf / 2.0;
    GenotypeDist d;
    d[0] = (1.0 - pm) * (1.0 - pf);
    d[2] = pm * pf;
    d[1] = 1.0 - d[0] - d[2];
    return d;
}

double JointTable::at(int g, const FamilyProxy& proxy) const {
    const int b = (kind == ProxyKind::SpouseChild || kind == ProxyKind::TwoParents) ? proxy.b : 0;
    return p[static_cast<std::size_t>(g)][static_cast<std::size_t>(proxy.a)]
            [static_cast<std::size_t>(b)];
}

double JointTable::total() const {
    double s = 0.0;
    for (const auto& pa : p)
        for (const auto& pb : pa)
            for (double v : pb) s += v;
    return s;
}

JointTable family_joint(double theta, ProxyKind kind) {
    const GenotypeDist hwe = hwe_probs(theta);
    JointTable t;
    t.kind = kind;
    switch (kind) {
        case ProxyKind::SpouseChild:
            for (int g = 0; g < 3; ++g)
                for (int gs = 0; gs < 3; ++gs) {
                    const GenotypeDist child = transmission(g, gs);
                    for (int gc = 0; gc < 3; ++gc)
                        t.p[g][gs][gc] = hwe[g] * hwe[gs] * child[gc];
                }
            break;
        case ProxyKind::TwoParents:
            for (int gm = 0; gm < 3; ++gm)
                for (int gf = 0; gf < 3; ++gf) {
                    const GenotypeDist child = transmission(gm, gf);
                    for (int g = 0; g < 3; ++g)
                        t.p[g][gm][gf] = hwe[gm] * hwe[gf] * child[g];
                }
            break;
        case ProxyKind::OneParent:
            // Other parent unobserved, integrated out under random mating.
            for (int gp = 0; gp < 3; ++gp)
                for (int go = 0; go < 3; ++go) {
                    const GenotypeDist child = transmission(gp, go);
                    for (int g = 0; g < 3; ++g)
                        t.p[g][gp][0] += hwe[gp] * hwe[go] * child[g];
                }
            break;
        case ProxyKind::ChildOnly:
            // Child's other parent unobserved.
            for (int g = 0; g < 3; ++g)
                for (int gs = 0; gs < 3; ++gs) {
                    const GenotypeDist child = transmission(g, gs);
                    for (int gc = 0; gc < 3; ++gc)
                        t.p[g][gc][0] += hwe[g] * hwe[gs] * child[gc];
                }
            break;
        case ProxyKind::None:
            throw InvariantViolation("no joint table for an absent proxy");
    }
    return t;
}

GenotypeDist conditional_given_family(double theta, const FamilyProxy& proxy) {
    if (proxy.kind == ProxyKind::None) return hwe_probs(theta);
    const JointTable t = family_joint(theta, proxy.kind);
    GenotypeDist d;
    double total = 0.0;
    for (int g = 0; g < 3; ++g) {
        d[g] = t.at(g, proxy);
        total += d[g];
    }
    if (total == 0.0) {
        throw IncompatibleProxy("family configuration " + proxy_kind_name(proxy.kind) + "(" +
                                std::to_string(proxy.a) + "," + std::to_string(proxy.b) +
                                ") has zero probability");
    }
    for (int g = 0; g < 3; ++g) d[g] /= total;
    return d;
}

double family_marginal(double theta, const FamilyProxy& proxy) {
    if (proxy.kind == ProxyKind::None) return 1.0;
    const JointTable t = family_joint(theta, proxy.kind);
    double total = 0.0;
    for (int g = 0; g < 3; ++g) total += t.at(g, proxy);
    return total;
}

FamilyTables::FamilyTables(double theta)
    : theta_(theta),
      spouse_child_(family_joint(theta, ProxyKind::SpouseChild)),
      one_parent_(family_joint(theta, ProxyKind::OneParent)),
      two_parents_(family_joint(theta, ProxyKind::TwoParents)),
      child_only_(family_joint(theta, ProxyKind::ChildOnly)) {}

std::array<double, 3> FamilyTables::joint_column(const FamilyProxy& proxy) const {
    const JointTable* t = nullptr;
    switch (proxy.kind) {
        case ProxyKind::SpouseChild: t = &spouse_child_; break;
        case ProxyKind::OneParent: t = &one_parent_; break;
        case ProxyKind::TwoParents: t = &two_parents_; break;
        case ProxyKind::ChildOnly: t = &child_only_; break;
        case ProxyKind::None: {
            const GenotypeDist hwe = hwe_probs(theta_);
            return {hwe[0], hwe[1], hwe[2]};
        }
    }
    return {t->at(0, proxy), t->at(1, proxy), t->at(2, proxy)};
}

}  // namespace fswel::genetics
