#include <catch_amalgamated.hpp>

#include "malinbai/linalg.hpp"
#include "malinbai/rng.hpp"
#include "test_util.hpp"

using malinbai::Mat;
using malinbai::ProjectionBasis;
using malinbai::Vec;

TEST_CASE("solve_psd on diagonal and identity systems") {
    Mat V = 2.0 * Mat::Identity(2, 2);
    Vec b(2);
    b << 4.0, 2.0;
    Vec x = malinbai::solve_psd(V, b);
    CHECK(x(0) == Catch::Approx(2.0));
    CHECK(x(1) == Catch::Approx(1.0));

    auto s = malinbai::RngStream(11).sampler();
    for (int d : {1, 3, 7}) {
        const Vec rhs = test_util::random_vec(d, s);
        const Vec sol = malinbai::solve_psd(Mat::Identity(d, d), rhs);
        CHECK((sol - rhs).norm() < 1e-12);
    }
}

TEST_CASE("solve_psd verified by multiplying back") {
    Mat V(2, 2);
    V << 2.0, 1.0, 1.0, 2.0;
    Vec b(2);
    b << 3.0, 3.0;
    const Vec x = malinbai::solve_psd(V, b);
    CHECK(x(0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(x(1) == Catch::Approx(1.0).margin(1e-12));
    CHECK((V * x - b).norm() <= 1e-8 * (V.norm() * x.norm() + b.norm()));
}

TEST_CASE("solve_psd rejects non-PD and asymmetric input") {
    Mat singular(2, 2);
    singular << 1.0, 1.0, 1.0, 1.0;
    Vec b = Vec::Ones(2);
    CHECK_THROWS_AS(malinbai::solve_psd(singular, b), malinbai::SingularMatrix);

    Mat asym(2, 2);
    asym << 1.0, 0.5, 0.0, 1.0;
    CHECK_THROWS_AS(malinbai::solve_psd(asym, b), malinbai::SingularMatrix);

    Mat negative = -Mat::Identity(2, 2);
    CHECK_THROWS_AS(malinbai::solve_psd(negative, b), malinbai::SingularMatrix);
}

TEST_CASE("solve_psd round trip on random PD matrices") {
    auto s = malinbai::RngStream(101).sampler();
    for (int trial = 0; trial < 1000; ++trial) {
        const int d = 1 + static_cast<int>(s.uniform_int(25));
        const Mat V = test_util::random_pd(d, s);
        const Vec b = test_util::random_vec(d, s);
        const Vec x = malinbai::solve_psd(V, b);
        REQUIRE((V * x - b).norm() <= 1e-8 * (V.norm() * x.norm() + b.norm()));
    }
}

TEST_CASE("quad_norm_sq closed-form values") {
    CHECK(malinbai::quad_norm_sq(2.0 * Mat::Identity(2, 2), Vec::Unit(2, 0)) ==
          Catch::Approx(0.5));

    auto s = malinbai::RngStream(7).sampler();
    const Vec a = test_util::random_vec(5, s);
    CHECK(malinbai::quad_norm_sq(Mat::Identity(5, 5), a) == Catch::Approx(a.squaredNorm()));

    // [[2,1],[1,2]]^{-1} = (1/3) [[2,-1],[-1,2]], so (1,1) maps to 2/3.
    Mat V(2, 2);
    V << 2.0, 1.0, 1.0, 2.0;
    CHECK(malinbai::quad_norm_sq(V, Vec::Ones(2)) == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("quad_norm_sq agrees with solve_psd") {
    auto s = malinbai::RngStream(13).sampler();
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 2 + static_cast<int>(s.uniform_int(10));
        const Mat V = test_util::random_pd(d, s);
        const Vec a = test_util::random_vec(d, s);
        const double direct = malinbai::quad_norm_sq(V, a);
        const double via_solve = a.dot(malinbai::solve_psd(V, a));
        REQUIRE(direct == Catch::Approx(via_solve).epsilon(1e-9));
        REQUIRE(direct >= 0.0);
    }
}

TEST_CASE("rank_basis finds the numerical rank") {
    std::vector<Vec> planar{Vec::Unit(3, 0), Vec::Unit(3, 1)};
    const ProjectionBasis basis = malinbai::rank_basis(planar);
    REQUIRE(basis.dim() == 2);
    REQUIRE(basis.ambient_dim() == 3);
    // Rows orthonormal and spanning the e1-e2 plane.
    CHECK((basis.rows * basis.rows.transpose() - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
    for (const Vec& a : planar) {
        const Vec coords = basis.rows * a;
        CHECK((basis.rows.transpose() * coords - a).norm() < 1e-10);
    }

    std::vector<Vec> collinear{Vec::Unit(3, 0), 2.0 * Vec::Unit(3, 0)};
    CHECK(malinbai::rank_basis(collinear).dim() == 1);
}

TEST_CASE("rank_basis reconstruction on random spanning arms") {
    auto s = malinbai::RngStream(19).sampler();
    const std::vector<Vec> arms = test_util::random_unit_arms(5, 3, s);
    const ProjectionBasis basis = malinbai::rank_basis(arms);
    REQUIRE(basis.dim() == 3);
    for (const Vec& a : arms) {
        const Vec coords = malinbai::project(basis, a);
        CHECK((basis.rows.transpose() * coords - a).norm() < 1e-9);
    }
}

TEST_CASE("rank_basis rejects all-zero arm sets") {
    std::vector<Vec> zeros{Vec::Zero(3), Vec::Zero(3)};
    CHECK_THROWS_AS(malinbai::rank_basis(zeros), malinbai::EmptyArmSet);
    CHECK_THROWS_AS(malinbai::rank_basis({}), malinbai::EmptyArmSet);
}

TEST_CASE("project returns coordinates and preserves inner products") {
    ProjectionBasis basis;
    basis.rows = Mat::Zero(2, 3);
    basis.rows(0, 0) = 1.0;
    basis.rows(1, 1) = 1.0;
    Vec a(3);
    a << 3.0, 4.0, 0.0;
    const Vec coords = malinbai::project(basis, a);
    REQUIRE(coords.size() == 2);
    CHECK(coords(0) == Catch::Approx(3.0));
    CHECK(coords(1) == Catch::Approx(4.0));

    // Identity basis projects to the vector itself.
    ProjectionBasis full;
    full.rows = Mat::Identity(4, 4);
    auto s = malinbai::RngStream(23).sampler();
    const Vec v = test_util::random_vec(4, s);
    CHECK((malinbai::project(full, v) - v).norm() < 1e-12);

    // Pairwise inner products survive rank_basis + project.
    const std::vector<Vec> arms = test_util::random_unit_arms(4, 6, s);
    const ProjectionBasis rb = malinbai::rank_basis(arms);
    std::vector<Vec> projected;
    for (const Vec& arm : arms) projected.push_back(malinbai::project(rb, arm));
    for (std::size_t i = 0; i < arms.size(); ++i) {
        for (std::size_t j = 0; j < arms.size(); ++j) {
            REQUIRE(projected[i].dot(projected[j]) ==
                    Catch::Approx(arms[i].dot(arms[j])).margin(1e-9));
        }
    }
}

TEST_CASE("project rejects out-of-span vectors") {
    ProjectionBasis basis;
    basis.rows = Mat::Zero(1, 3);
    basis.rows(0, 0) = 1.0;
    Vec off(3);
    off << 1.0, 0.5, 0.0;
    CHECK_THROWS_AS(malinbai::project(basis, off), malinbai::OutOfSpan);
}
