#include "doctest.h"

#include <cmath>
#include <initializer_list>
#include <limits>

#include "diskbif/dd.hpp"

using diskbif::Dd;

// Reference values computed with 60-digit arithmetic and split into the
// nearest double plus the exact remainder, so both components of a correct
// double-double result are pinned.
namespace {

void check_dd(Dd got, double hi, double lo) {
    Dd ref(hi, lo);
    double err = std::abs(to_double(got - ref));
    // Composed calls (pow routes through exp and log) accumulate a few tens
    // of double-double ulps; 1e-28 leaves that headroom while still sitting
    // twelve orders below plain double rounding.
    CHECK(err <= 1e-28 * std::abs(hi));
}

}  // namespace

TEST_CASE("two-sum and two-product are error-free") {
    Dd s = Dd::sum2(0.1, 0.2);
    // 0.1 + 0.2 in binary64: hi rounds up, lo carries the defect.
    CHECK(s.hi() == 0.30000000000000004);
    CHECK(s.lo() != 0.0);
    CHECK(s.hi() + s.lo() == s.hi());  // |lo| < ulp(hi)/2

    Dd p = Dd::prod2(1e8 + 1.0, 1e8 - 1.0);
    CHECK(p.hi() + p.lo() == p.hi());
    // Exact product is 1e16 - 1, representable only across both limbs.
    CHECK(p.hi() == 1e16);
    CHECK(p.lo() == -1.0);
}

TEST_CASE("field operations hold ~31 digits") {
    Dd third = Dd(1.0) / Dd(3.0);
    Dd one = third * Dd(3.0);
    CHECK(std::abs(to_double(one - Dd(1.0))) < 1e-31);

    Dd a(1.0, 1e-20);
    Dd b = a - Dd(1.0);
    CHECK(b.hi() == doctest::Approx(1e-20).epsilon(1e-14));

    Dd q = (Dd(355.0) / Dd(113.0)) * Dd(113.0) - Dd(355.0);
    CHECK(std::abs(to_double(q)) < 1e-28);
}

TEST_CASE("exp matches 60-digit references") {
    check_dd(diskbif::exp(Dd(0.5)), 1.6487212707001282, -4.731568479435833e-17);
    check_dd(diskbif::exp(Dd(-3.25)), 0.03877420783172201, 1.1433418851841824e-18);
    check_dd(diskbif::exp(Dd(10.0)), 22026.465794806718, -1.3780134700517372e-12);
    CHECK(to_double(diskbif::exp(Dd(800.0))) == std::numeric_limits<double>::infinity());
    CHECK(to_double(diskbif::exp(Dd(-800.0))) == 0.0);
}

TEST_CASE("log, log1p, expm1 match references") {
    check_dd(diskbif::log(Dd(7.0)), 1.9459101490553132, 7.323586207904907e-17);
    // The argument is the binary double nearest 1e-8, not the decimal value;
    // the references are evaluated at that exact binary point.
    check_dd(diskbif::expm1(Dd(1e-8)), 1.0000000050000001e-08, -6.764525071437688e-25);
    check_dd(diskbif::log1p(Dd(1e-8)), 9.999999950000001e-09, -4.779087200456198e-25);

    // Round trips through the inverse pair.
    for (double x : {0.25, 1.0, 3.75, 42.0, 600.0}) {
        Dd r = diskbif::log(diskbif::exp(Dd(x)));
        CHECK(std::abs(to_double(r - Dd(x))) < 1e-28 * (1.0 + x));
    }
}

TEST_CASE("sqrt, pow, trig match references") {
    check_dd(diskbif::sqrt(Dd(2.0)), 1.4142135623730951, -9.667293313452913e-17);
    Dd s2 = diskbif::sqrt(Dd(2.0));
    CHECK(std::abs(to_double(s2 * s2 - Dd(2.0))) < 1e-30);

    check_dd(diskbif::pow(Dd(3.0), 1.5), 5.196152422706632, -1.4303668319585554e-16);

    check_dd(diskbif::sin(Dd(1.0)), 0.8414709848078965, 1.776845092935536e-18);
    check_dd(diskbif::cos(Dd(2.5)), -0.8011436155469337, -1.8674742705085553e-17);
    CHECK(std::abs(to_double(diskbif::sin(diskbif::dd_const::pi))) < 1e-31);
}

TEST_CASE("comparisons use both limbs") {
    Dd a(1.0, 1e-20);
    Dd b(1.0, 2e-20);
    CHECK(a < b);
    CHECK(b > a);
    CHECK(a != b);
    CHECK(diskbif::abs(Dd(-3.0, 1e-18)) == Dd(3.0, -1e-18));
    CHECK(to_double(diskbif::max(a, b)) == 1.0);
    CHECK((diskbif::max(a, b) == b));
    CHECK((diskbif::min(a, b) == a));
}
