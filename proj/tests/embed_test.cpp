#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "sara/embed.hpp"
#include "sara/errors.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using testutil::error_code;

namespace {

double l2(const sara::EmbeddingVector& v) {
    double s = 0.0;
    for (float x : v.values) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

bool bit_equal(const sara::EmbeddingVector& a, const sara::EmbeddingVector& b) {
    return a.values.size() == b.values.size() &&
           (a.values.empty() ||
            std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(float)) == 0);
}

}  // namespace

TEST_CASE("fnv1a64 known values") {
    CHECK(sara::fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(sara::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("hash_stub_embed single-token placement") {
    // "bird" hashes to slot 2 with a positive sign at dim 4.
    auto v = sara::hash_stub_embed("bird", 4);
    REQUIRE(v.dim() == 4);
    CHECK(v.values[0] == 0.0f);
    CHECK(v.values[1] == 0.0f);
    CHECK(v.values[2] == 1.0f);
    CHECK(v.values[3] == 0.0f);
    CHECK(v.normalized);
}

TEST_CASE("hash_stub_embed determinism and normalization") {
    auto a = sara::hash_stub_embed("the quick brown fox", 64);
    auto b = sara::hash_stub_embed("the quick brown fox", 64);
    CHECK(bit_equal(a, b));
    CHECK(l2(a) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(a.normalized);

    auto raw = sara::hash_stub_embed("the quick brown fox", 64, false);
    CHECK(!raw.normalized);
    CHECK(l2(raw) > 1.0);  // several tokens accumulate past unit norm
}

TEST_CASE("hash_stub_embed accumulates repeated tokens") {
    auto once = sara::hash_stub_embed("bird", 4, false);
    auto twice = sara::hash_stub_embed("bird bird", 4, false);
    CHECK(twice.values[2] == 2.0f * once.values[2]);
    // Normalized they coincide.
    CHECK(bit_equal(sara::hash_stub_embed("bird", 4), sara::hash_stub_embed("bird bird", 4)));
}

TEST_CASE("hash_stub_embed edge cases") {
    auto empty = sara::hash_stub_embed("", 8);
    REQUIRE(empty.dim() == 8);
    for (float x : empty.values) CHECK(x == 0.0f);
    CHECK(!empty.normalized);

    auto one = sara::hash_stub_embed("alpha beta", 1);
    REQUIRE(one.dim() == 1);  // everything lands in slot 0

    CHECK(error_code([] { sara::hash_stub_embed("x", 0); }) == sara::ErrCode::BadArgument);
}

TEST_CASE("EmbedBackend hash stub dispatch") {
    sara::EmbedBackendConfig cfg;
    cfg.kind = sara::EmbedBackendConfig::Kind::HashStub;
    cfg.dim = 16;
    sara::EmbedBackend backend(cfg);

    CHECK(bit_equal(backend.embed("water"), sara::hash_stub_embed("water", 16)));

    auto batch = backend.embed_batch({"water", "stone", ""});
    REQUIRE(batch.size() == 3);
    CHECK(bit_equal(batch[0], sara::hash_stub_embed("water", 16)));
    CHECK(bit_equal(batch[1], sara::hash_stub_embed("stone", 16)));
    CHECK(!batch[2].normalized);

    auto fn = backend.fn();
    CHECK(bit_equal(fn("water"), backend.embed("water")));
}

TEST_CASE("EmbedBackend config validation") {
    sara::EmbedBackendConfig remote;
    remote.kind = sara::EmbedBackendConfig::Kind::Remote;
    remote.endpoint = "";
    CHECK(error_code([&] { sara::EmbedBackend b(remote); }) == sara::ErrCode::BadConfig);

    sara::EmbedBackendConfig zero;
    zero.dim = 0;
    CHECK(error_code([&] { sara::EmbedBackend b(zero); }) == sara::ErrCode::BadConfig);
}

TEST_CASE("aggregate_mean componentwise") {
    std::vector<sara::EmbeddingVector> one = {{{1.0f, 0.0f}, false}};
    auto m1 = sara::aggregate_mean(one);
    CHECK(m1.values == std::vector<float>{1.0f, 0.0f});

    std::vector<sara::EmbeddingVector> two = {{{1.0f, 0.0f}, false}, {{0.0f, 1.0f}, false}};
    auto m2 = sara::aggregate_mean(two);
    CHECK(m2.values == std::vector<float>{0.5f, 0.5f});

    CHECK(error_code([] {
        std::vector<sara::EmbeddingVector> none;
        sara::aggregate_mean(none);
    }) == sara::ErrCode::BadArgument);

    CHECK(error_code([] {
        std::vector<sara::EmbeddingVector> ragged = {{{1.0f}, false}, {{1.0f, 2.0f}, false}};
        sara::aggregate_mean(ragged);
    }) == sara::ErrCode::DimMismatch);
}

TEST_CASE("aggregate_mean permutation stability on a fixed instance") {
    testutil::Lcg rng(11);
    std::vector<sara::EmbeddingVector> vecs;
    for (int i = 0; i < 7; ++i) {
        sara::EmbeddingVector v;
        for (int d = 0; d < 12; ++d) v.values.push_back(rng.signed_unit());
        vecs.push_back(std::move(v));
    }
    auto forward = sara::aggregate_mean(vecs);
    std::vector<sara::EmbeddingVector> reversed(vecs.rbegin(), vecs.rend());
    auto backward = sara::aggregate_mean(reversed);
    REQUIRE(forward.dim() == backward.dim());
    for (std::size_t d = 0; d < forward.dim(); ++d) {
        CHECK(forward.values[d] == backward.values[d]);
    }
}

TEST_CASE("expand_query averages the pair") {
    sara::EmbeddingVector q{{1.0f, 0.0f}, true};
    sara::EmbeddingVector t{{0.0f, 1.0f}, true};
    auto v = sara::expand_query(q, t);
    CHECK(v.values == std::vector<float>{0.5f, 0.5f});

    auto same = sara::expand_query(q, q);
    CHECK(same.values == q.values);

    CHECK(error_code([&] {
        sara::EmbeddingVector bad{{1.0f, 2.0f, 3.0f}, true};
        sara::expand_query(q, bad);
    }) == sara::ErrCode::DimMismatch);
}

TEST_CASE("normalize_vector") {
    sara::EmbeddingVector v{{3.0f, 4.0f}, false};
    auto n = sara::normalize_vector(v);
    CHECK(n.values[0] == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(n.values[1] == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(n.normalized);

    CHECK(error_code([] {
        sara::EmbeddingVector z{{0.0f, 0.0f}, false};
        sara::normalize_vector(z);
    }) == sara::ErrCode::ZeroVector);
}

TEST_CASE("apply_projection") {
    sara::ProjectionMap identity;
    identity.in_dim = 2;
    identity.out_dim = 2;
    identity.weights = {1.0f, 0.0f, 0.0f, 1.0f};
    identity.bias = {0.0f, 0.0f};
    sara::EmbeddingVector v{{0.25f, -0.75f}, false};
    CHECK(sara::apply_projection(v, identity).values == v.values);

    sara::ProjectionMap affine;
    affine.in_dim = 2;
    affine.out_dim = 2;
    affine.weights = {1.0f, 1.0f, 0.0f, 2.0f};
    affine.bias = {0.0f, 0.0f};
    sara::EmbeddingVector in{{1.0f, 2.0f}, false};
    auto out = sara::apply_projection(in, affine);
    CHECK(out.values == std::vector<float>{3.0f, 4.0f});

    sara::ProjectionMap bias_only;
    bias_only.in_dim = 2;
    bias_only.out_dim = 1;
    bias_only.weights = {0.0f, 0.0f};
    bias_only.bias = {5.5f};
    CHECK(sara::apply_projection(in, bias_only).values == std::vector<float>{5.5f});

    CHECK(error_code([&] {
        sara::EmbeddingVector narrow{{1.0f}, false};
        sara::apply_projection(narrow, affine);
    }) == sara::ErrCode::DimMismatch);

    sara::ProjectionMap huge;
    huge.in_dim = 1;
    huge.out_dim = 1;
    huge.weights = {3.0e38f};
    huge.bias = {0.0f};
    CHECK(error_code([&] {
        sara::EmbeddingVector big{{3.0e38f}, false};
        sara::apply_projection(big, huge);
    }) == sara::ErrCode::ProjectionOverflow);
}

TEST_CASE("projection map save and load round trip") {
    fs::path dir = testutil::fresh_dir("projmap");
    fs::path file = dir / "proj.json";

    testutil::Lcg rng(21);
    sara::ProjectionMap map;
    map.in_dim = 5;
    map.out_dim = 3;
    for (int i = 0; i < 15; ++i) map.weights.push_back(rng.signed_unit());
    for (int i = 0; i < 3; ++i) map.bias.push_back(rng.signed_unit());
    map.source = "unit-test";

    sara::save_projection_map(map, file);
    auto loaded = sara::load_projection_map(file);
    CHECK(loaded.in_dim == 5);
    CHECK(loaded.out_dim == 3);
    CHECK(loaded.source == "unit-test");
    REQUIRE(loaded.weights.size() == map.weights.size());
    CHECK(std::memcmp(loaded.weights.data(), map.weights.data(),
                      map.weights.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(loaded.bias.data(), map.bias.data(), map.bias.size() * sizeof(float)) == 0);
    fs::remove_all(dir);
}

TEST_CASE("projection map load failures") {
    fs::path dir = testutil::fresh_dir("projmap_bad");

    CHECK(error_code([&] { sara::load_projection_map(dir / "absent.json"); }) ==
          sara::ErrCode::MissingFile);

    fs::path garbage = dir / "garbage.json";
    testutil::write_file(garbage, "{{{");
    CHECK(error_code([&] { sara::load_projection_map(garbage); }) == sara::ErrCode::CorruptFile);

    fs::path short_weights = dir / "short.json";
    testutil::write_file(short_weights,
                         R"({"in_dim": 2, "out_dim": 2, "weights": "AAAA", "bias": "AAAA",)"
                         R"( "source": ""})");
    CHECK(error_code([&] { sara::load_projection_map(short_weights); }) ==
          sara::ErrCode::CorruptFile);
    fs::remove_all(dir);
}
