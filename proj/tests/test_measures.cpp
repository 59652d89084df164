#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hwg/measure.hpp"
#include "hwg/rng.hpp"
#include "hwg/transport.hpp"

using namespace hwg;

namespace {
const double kThird = 1.0 / 3.0;

DiscreteMeasure uniform_leaves(int leaves) {
    std::vector<Atom> atoms;
    for (int i = 1; i <= leaves; ++i) atoms.push_back({vertex_point(i), 1.0 / leaves});
    return DiscreteMeasure::make(std::move(atoms));
}
} // namespace

TEST_CASE("measure canonical form") {
    MetricGraph g = star_tree({1.0, 1.0, 1.0});
    // duplicate points merge
    DiscreteMeasure m = DiscreteMeasure::make({{vertex_point(1), 0.25},
                                               {vertex_point(1), 0.25},
                                               {vertex_point(2), 0.5}});
    CHECK(m.size() == 2);
    CHECK(m.mass_at(vertex_point(1)) == doctest::Approx(0.5));

    // tiny atoms pruned and renormalized
    DiscreteMeasure pruned = DiscreteMeasure::make({{vertex_point(1), 1.0 - 1e-16},
                                                    {vertex_point(2), 1e-16}});
    CHECK(pruned.size() == 1);
    CHECK(pruned.mass_at(vertex_point(1)) == 1.0);

    CHECK_THROWS_AS(DiscreteMeasure::make({{vertex_point(1), 0.7}}), invalid_argument);
    CHECK_THROWS_AS(DiscreteMeasure::make({{vertex_point(1), -0.2}, {vertex_point(2), 1.2}}),
                    invalid_argument);
}

TEST_CASE("second moment") {
    MetricGraph g = star_tree({1.0, 1.0, 1.0});
    DiscreteMeasure u = uniform_leaves(3);
    CHECK(second_moment(DiscreteMeasure::dirac(vertex_point(0)), g, vertex_point(0)) == 0.0);
    CHECK(second_moment(u, g, vertex_point(0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(second_moment(u, g, vertex_point(1)) == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("mixture") {
    DiscreteMeasure p = DiscreteMeasure::make(
        {{vertex_point(1), kThird}, {vertex_point(2), kThird}, {vertex_point(3), kThird}});
    DiscreteMeasure q = DiscreteMeasure::make(
        {{vertex_point(1), 2.0 / 3.0}, {vertex_point(2), 1.0 / 6.0}, {vertex_point(3), 1.0 / 6.0}});

    CHECK(mixture(p, q, 0.0) == p);
    CHECK(mixture(p, q, 1.0) == q);

    DiscreteMeasure mid = mixture(p, q, 0.25);
    CHECK(mid.mass_at(vertex_point(1)) == doctest::Approx(5.0 / 12.0).epsilon(1e-14));
    CHECK(mid.mass_at(vertex_point(2)) == doctest::Approx(7.0 / 24.0).epsilon(1e-14));
    CHECK(mid.mass_at(vertex_point(3)) == doctest::Approx(7.0 / 24.0).epsilon(1e-14));

    DiscreteMeasure d = DiscreteMeasure::dirac(vertex_point(2));
    CHECK(mixture(d, d, 0.7) == d);
}

TEST_CASE("mixture preserves normalization under iteration") {
    Rng rng(3);
    DiscreteMeasure acc = uniform_leaves(3);
    DiscreteMeasure target = DiscreteMeasure::make(
        {{vertex_point(1), 0.8}, {vertex_point(2), 0.1}, {vertex_point(3), 0.1}});
    for (int k = 0; k < 500; ++k) acc = mixture(acc, target, 0.25 + 0.5 * rng.next_double());
    double total = 0.0;
    for (const Atom& a : acc.atoms()) total += a.mass;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("induced pseudometric") {
    MetricGraph g = star_tree({1.0, 1.0, 1.0});
    MemoryField f({{"a", 1.0, DiscreteMeasure::dirac(vertex_point(1))},
                   {"b", 1.0, DiscreteMeasure::dirac(vertex_point(2))},
                   {"c", 1.0, uniform_leaves(3)}});
    CHECK(induced_pseudometric(f, g, "a", "a") == 0.0);
    CHECK(induced_pseudometric(f, g, "a", "b") == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(induced_pseudometric(f, g, "a", "zz"), invalid_argument);

    // the star example distance
    MemoryField f2({{"p", 1.0, uniform_leaves(3)},
                    {"q", 1.0, DiscreteMeasure::make({{vertex_point(1), 2.0 / 3.0},
                                                      {vertex_point(2), 1.0 / 6.0},
                                                      {vertex_point(3), 1.0 / 6.0}})}});
    CHECK(induced_pseudometric(f2, g, "p", "q") ==
          doctest::Approx(std::sqrt(4.0 / 3.0)).epsilon(1e-12));

    // symmetry and triangle inequality on random fields
    Rng rng(17);
    for (int k = 0; k < 10; ++k) {
        auto rand_measure = [&]() {
            std::vector<Atom> atoms;
            double sum = 0.0;
            std::vector<double> raw;
            for (int i = 1; i <= 3; ++i) {
                raw.push_back(0.05 + rng.next_double());
                sum += raw.back();
            }
            for (int i = 1; i <= 3; ++i)
                atoms.push_back({vertex_point(i), raw[static_cast<std::size_t>(i - 1)] / sum});
            return DiscreteMeasure::make(std::move(atoms));
        };
        MemoryField fr({{"x", 1.0, rand_measure()},
                        {"y", 1.0, rand_measure()},
                        {"z", 1.0, rand_measure()}});
        double xy = induced_pseudometric(fr, g, "x", "y");
        double yx = induced_pseudometric(fr, g, "y", "x");
        double xz = induced_pseudometric(fr, g, "x", "z");
        double zy = induced_pseudometric(fr, g, "z", "y");
        CHECK(xy == doctest::Approx(yx).epsilon(1e-12));
        CHECK(xy <= xz + zy + 1e-9);
    }
}

TEST_CASE("context distance") {
    Context c1(1, {{"x", {{1.0, 0.0}}}});
    Context c2(1, {{"x", {{0.0, 0.0}}}});
    std::map<std::string, double> w{{"x", 1.0}};
    CHECK(context_distance(c1, c1, w) == 0.0);
    CHECK(context_distance(c1, c2, w) == doctest::Approx(1.0));

    // two fibers weight 1/2 each, TV gaps 1 and 3
    Context a(2, {{"x", {{1.0, 0.0}, {0.0, 0.0}}}, {"y", {{2.0, 0.0}, {1.0, 0.0}}}});
    Context b(2, {{"x", {{0.5, 0.0}, {0.5, 0.0}}}, {"y", {{0.0, 0.0}, {0.0, 0.0}}}});
    std::map<std::string, double> half{{"x", 0.5}, {"y", 0.5}};
    CHECK(context_distance(a, b, half) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));

    Context mismatched(3, {{"x", {{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}}}});
    CHECK_THROWS_AS(context_distance(a, mismatched, w), invalid_argument);
}

TEST_CASE("field invariants") {
    CHECK_THROWS_AS(MemoryField({{"a", 1.0, uniform_leaves(2)}, {"a", 1.0, uniform_leaves(2)}}),
                    invalid_argument);
    CHECK_THROWS_AS(MemoryField({{"a", 0.0, uniform_leaves(2)}}), invalid_argument);
    CHECK_THROWS_AS(MemoryField({{"a", -1.0, uniform_leaves(2)}}), invalid_argument);
}
