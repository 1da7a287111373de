#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "bdris/config.hpp"
#include "bdris/container.hpp"
#include "bdris/errors.hpp"
#include "helpers.hpp"

using namespace bdris;

TEST_CASE("defaults follow the simulation setup") {
    ExperimentConfig cfg = ExperimentConfig::from_kv(KvStore());
    CHECK(cfg.sys.n_i == 64);
    CHECK(cfg.sys.n_real == 100);
    CHECK(cfg.sys.p_t == doctest::Approx(100.0));      // 20 dBm in mW
    CHECK(cfg.sys.sigma2 == doctest::Approx(1e-8));    // -80 dBm in mW
    CHECK(cfg.fade.c0 == doctest::Approx(1e-3));       // -30 dB
    CHECK(cfg.fade.d_it == 50.0);
    CHECK(cfg.fade.d_ri == 2.0);
    CHECK(cfg.fade.d_rt == 52.0);
    CHECK(cfg.fade.a_it == 2.0);
    CHECK(cfg.fade.a_ri == 2.8);
    CHECK(cfg.fade.a_rt == 3.5);
    CHECK(cfg.fade.k_t == doctest::Approx(db_to_linear(1.0)));
    CHECK(cfg.lossy.l1 == doctest::Approx(6e-9));
    CHECK(cfg.lossy.l2 == doctest::Approx(0.7e-9));
    CHECK(cfg.lossy.c_min == doctest::Approx(0.35e-12));
    CHECK(cfg.lossy.c_max == doctest::Approx(3.20e-12));
    CHECK(cfg.lossy.omega == doctest::Approx(2.0 * 3.14159265358979323846 * 28e9));
    CHECK(cfg.discrete.tau == 0.1);
    CHECK(cfg.net.ffc_layers == 4);
    CHECK(cfg.net.ffc_width == 768);
    CHECK(cfg.net.ne_width == 384);
    CHECK(cfg.net.gc_layers == 3);
    CHECK(cfg.net.gc_width == 384);
    CHECK(cfg.net.rfc_layers == 4);
    CHECK(cfg.net.rfc_width == 768);
    CHECK(cfg.net.pfc_layers == 8);
    CHECK(cfg.net.pfc_width == 512);
    CHECK(cfg.schedule.inner_iters == 1000);
    CHECK(cfg.schedule.outer_epochs == 100);
    CHECK(cfg.schedule.patience == 20);
    CHECK(cfg.schedule.lr_min == 1e-5);
    CHECK(cfg.schedule.lr_max == 1e-3);
    CHECK(kY0 == doctest::Approx(1.0 / 50.0));
}

TEST_CASE("config parsing: comments, overrides, unknown keys, bad values") {
    KvStore kv = KvStore::parse_text(
        "# comment line\n"
        "sys.n_i = 8   # trailing comment\n"
        "variant = lossy\n"
        "lossy.r_ohm = 0.5\n");
    ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
    CHECK(cfg.sys.n_i == 8);
    CHECK(cfg.variant == Variant::Lossy);
    CHECK(cfg.lossy.r == 0.5);

    KvStore bad = KvStore::parse_text("sys.n_i = eight\n");
    CHECK_THROWS_AS(ExperimentConfig::from_kv(bad), ConfigError);
    KvStore unknown = KvStore::parse_text("sys.n_qubits = 3\n");
    CHECK_THROWS_AS(ExperimentConfig::from_kv(unknown), ConfigError);
    KvStore badsched = KvStore::parse_text("train.lr_min = 0.1\ntrain.lr_max = 0.001\n");
    CHECK_THROWS_AS(ExperimentConfig::from_kv(badsched), ConfigError);
}

TEST_CASE("config hash is stable under key order and sensitive to values") {
    KvStore a = KvStore::parse_text("sys.n_i = 8\ntrain.seed = 3\n");
    KvStore b = KvStore::parse_text("train.seed = 3\nsys.n_i = 8\n");
    KvStore c = KvStore::parse_text("sys.n_i = 8\ntrain.seed = 4\n");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != c.hash());
}

TEST_CASE("container round-trips sections bit-exactly") {
    namespace fs = std::filesystem;
    Rng rng(99);
    Container c;
    c.header()["kind"] = "test";
    c.header()["note"] = 12;
    ad::Tensor a = testutil::random_tensor(rng, 7, 3);
    ad::Tensor b = testutil::random_tensor(rng, 1, 9, -1e300, 1e300);
    c.add("alpha", a);
    c.add("beta", b);
    fs::path path = fs::temp_directory_path() / "bdris_container_test.bin";
    c.write(path.string());
    Container r = Container::read(path.string());
    CHECK(r.header().at("note") == 12);
    REQUIRE(r.get("alpha").size() == a.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(r.get("alpha")[k] == a[k]);
    for (std::size_t k = 0; k < b.size(); ++k) CHECK(r.get("beta")[k] == b[k]);
    CHECK(!r.has("gamma"));
    CHECK_THROWS_AS(r.get("gamma"), IoError);
    std::remove(path.string().c_str());
}

TEST_CASE("container rejects foreign files") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() / "bdris_container_bad.bin";
    {
        std::FILE* f = std::fopen(path.string().c_str(), "wb");
        std::fputs("definitely not a container", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(Container::read(path.string()), IoError);
    std::remove(path.string().c_str());
}
