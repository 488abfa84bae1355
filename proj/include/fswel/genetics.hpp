#ifndef FSWEL_GENETICS_HPP
#define FSWEL_GENETICS_HPP

#include <array>
#include <string>

#include "fswel/errors.hpp"

namespace fswel::genetics {

// Genotypes are minor-allele counts in {0, 1, 2}.
inline constexpr int kNumGenotypes = 3;

bool valid_genotype(int g) noexcept;

// Distribution over the three genotype values.
struct GenotypeDist {
    std::array<double, 3> p{0.0, 0.0, 0.0};

    double operator[](int g) const { return p[static_cast<std::size_t>(g)]; }
    double& operator[](int g) { return p[static_cast<std::size_t>(g)]; }
    double sum() const { return p[0] + p[1] + p[2]; }
};

enum class ProxyKind { None, SpouseChild, OneParent, TwoParents, ChildOnly };

std::string proxy_kind_name(ProxyKind kind);

// Observed family genotype configuration standing proxy for a subject's
// missing genotype. `a` and `b` hold, per kind:
//   SpouseChild: (spouse, child); TwoParents: (mother, father);
//   OneParent: (parent, unused); ChildOnly: (child, unused).
struct FamilyProxy {
    ProxyKind kind = ProxyKind::None;
    int a = -1;
    int b = -1;

    static FamilyProxy none() { return {}; }
    static FamilyProxy spouse_child(int gs, int gc);
    static FamilyProxy one_parent(int gp);
    static FamilyProxy two_parents(int gm, int gf);
    static FamilyProxy child_only(int gc);

    bool operator==(const FamilyProxy&) const = default;
};

// Hardy-Weinberg genotype frequencies: P(G=g) = theta^g (1-theta)^(2-g) (1 + 1{g=1}).
GenotypeDist hwe_probs(double theta);

// Child genotype distribution given parental genotypes; each parent
// transmits one of its two alleles uniformly at random.
GenotypeDist transmission(int gm, int gf);

// Full joint probability table over (G, G^f) for one proxy kind, built from
// HWE founders, random mating, and Mendelian transmission. For two-relative
// kinds the table is indexed [g][a][b]; one-relative kinds use b = 0.
struct JointTable {
    ProxyKind kind = ProxyKind::None;
    std::array<std::array<std::array<double, 3>, 3>, 3> p{};

    double at(int g, const FamilyProxy& proxy) const;
    double total() const;
};

JointTable family_joint(double theta, ProxyKind kind);

// P(G = g | G^f). Throws IncompatibleProxy when the configuration has zero mass.
GenotypeDist conditional_given_family(double theta, const FamilyProxy& proxy);

// P(G^f) = sum_g P(g, G^f).
double family_marginal(double theta, const FamilyProxy& proxy);

// All four joint tables for one theta, precomputed for hot loops.
class FamilyTables {
public:
    explicit FamilyTables(double theta);

    // (P(g, G^f))_{g=0,1,2} for the given proxy configuration.
    std::array<double, 3> joint_column(const FamilyProxy& proxy) const;

    double theta() const { return theta_; }

private:
    double theta_;
    JointTable spouse_child_;
    JointTable one_parent_;
    JointTable two_parents_;
    JointTable child_only_;
};

}  // namespace fswel::genetics

#endif
