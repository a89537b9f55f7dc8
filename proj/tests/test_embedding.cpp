#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "paritylab/embedding.hpp"

using namespace paritylab;

TEST_CASE("positional embeddings") {
    const EmbeddingTable t4(4);
    CHECK(t4.sin_at(1) == doctest::Approx(1.0).epsilon(1e-12));  // sin(pi/2)
    CHECK(t4.cos_at(1) == doctest::Approx(0.0).epsilon(1e-12));

    for (int n : {1, 2, 5, 20}) {
        const EmbeddingTable t(n);
        // j = n wraps to angle 2*pi
        CHECK(t.sin_at(n) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(t.cos_at(n) == doctest::Approx(1.0).epsilon(1e-12));
        for (int j = 1; j <= n; ++j) {
            CHECK(t.sin_at(j) * t.sin_at(j) + t.cos_at(j) * t.cos_at(j) ==
                  doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(EmbeddingTable(0), std::invalid_argument);
}

TEST_CASE("token embeddings concatenate token and position parts") {
    const EmbeddingTable t(8);
    const Vec4 w = t.token_embedding(1, 3);
    CHECK(w[0] == 1.0);
    CHECK(w[1] == 0.0);
    CHECK(w[2] == doctest::Approx(std::sin(2.0 * std::numbers::pi * 3 / 8)));
    CHECK(w[3] == doctest::Approx(std::cos(2.0 * std::numbers::pi * 3 / 8)));

    const Vec4 z = t.token_embedding(0, 5);
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 1.0);
}

TEST_CASE("embed_input prepends the CLS query") {
    const EmbeddingTable t(1);
    const auto seq = embed_input(BitString(0, 1), t);
    REQUIRE(seq.size() == 2);
    CHECK(seq[0] == Vec4{1.0, 0.0, 0.0, 0.0});
    CHECK(seq[1][0] == 0.0);
    CHECK(seq[1][1] == 1.0);
    CHECK(seq[1][2] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(seq[1][3] == doctest::Approx(1.0).epsilon(1e-12));

    // first coordinate always equals the bit value; CLS never changes
    const EmbeddingTable t6(6);
    for_each_input(6, [&](const BitString& x) {
        const auto s = embed_input(x, t6);
        REQUIRE(s[0] == Vec4{1.0, 0.0, 0.0, 0.0});
        for (int j = 1; j <= 6; ++j) REQUIRE(s[static_cast<std::size_t>(j)][0] == x.bit(j));
    });

    CHECK_THROWS_AS(embed_input(BitString(0, 3), t6), std::invalid_argument);
}

TEST_CASE("positional vectors are pairwise distinct") {
    for (int n : {2, 7, 16}) {
        const EmbeddingTable t(n);
        for (int a = 1; a <= n; ++a) {
            for (int b = a + 1; b <= n; ++b) {
                const bool same = t.sin_at(a) == t.sin_at(b) && t.cos_at(a) == t.cos_at(b);
                REQUIRE(!same);
            }
        }
    }
}

TEST_CASE("inner product against a direction is the angle cosine") {
    const EmbeddingTable t(12);
    for (double theta : {0.0, 0.3, 1.7, 4.0}) {
        for (int j = 1; j <= 12; ++j) {
            const double ip = std::sin(theta) * t.sin_at(j) + std::cos(theta) * t.cos_at(j);
            const double expected = std::cos(2.0 * std::numbers::pi * j / 12 - theta);
            REQUIRE(std::abs(ip - expected) < 1e-12);
        }
    }
}
