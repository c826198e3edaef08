#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "stokes/errors.hpp"
#include "stokes/experiments.hpp"
#include "stokes/parallel.hpp"

using namespace stokes;

TEST_CASE("default configurations validate") {
    CHECK(experiment_names().size() == 8);
    for (const auto& e : experiment_names()) {
        auto c = default_config(e);
        CHECK(c.at("experiment") == e);
        CHECK_NOTHROW(validate_config(e, c));
    }
    CHECK_THROWS_AS(default_config("nope"), ConfigError);
}

TEST_CASE("configuration rejection") {
    for (const auto& e : experiment_names()) {
        auto c = default_config(e);
        for (int n : {1, 4}) {
            auto b = c;
            b["n"] = n;
            CHECK_THROWS_AS(validate_config(e, b), ConfigError);
        }
        for (double q : {1.0, 0.5, -2.0}) {
            auto b = c;
            b["q"] = q;
            CHECK_THROWS_AS(validate_config(e, b), ConfigError);
        }
        auto extra = c;
        extra["unused"] = 1;
        CHECK_THROWS_AS(validate_config(e, extra), ConfigError);
        auto missing = c;
        missing.erase("seed");
        CHECK_THROWS_AS(validate_config(e, missing), ConfigError);
        auto wrong = c;
        wrong["alpha"] = "one";
        CHECK_THROWS_AS(validate_config(e, wrong), ConfigError);
    }
    auto c = default_config("navier_trace");
    c["n"] = 3;
    CHECK_THROWS_AS(validate_config("navier_trace", c), ConfigError);
    c = default_config("navier_trace");
    c["field"]["gauss_order"] = 9;
    CHECK_THROWS_AS(validate_config("navier_trace", c), ConfigError);
    c = default_config("besov_equivalence");
    c["qs"] = {2.0, 1.0};
    CHECK_THROWS_AS(validate_config("besov_equivalence", c), ConfigError);
    c = default_config("besov_equivalence");
    c["grid"]["dt"] = 1.0 / 2048;
    c["grid"]["length"] = 4096;
    CHECK_THROWS_AS(validate_config("besov_equivalence", c), ConfigError);
    c = default_config("lemma26_check");
    CHECK_THROWS_AS(validate_config("field_verify", c), ConfigError);
    c = default_config("lemma26_check");
    c["n"] = 3;
    CHECK_NOTHROW(validate_config("lemma26_check", c));
}

TEST_CASE("table formatting") {
    Table t;
    t.columns = {"a", "b"};
    t.add({num(0.1), "x"});
    CHECK(t.csv() == "a,b\n0.10000000000000001,x\n");
    CHECK(std::stod(num(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK_THROWS_AS(t.add({"1"}), DomainError);
}

TEST_CASE("field verification on the zero datum reports zeros") {
    auto c = default_config("field_verify");
    c["data"]["components"] = {0.0, 0.0};
    c["lattice"]["half"] = 2;
    auto r = run_experiment("field_verify", c);
    CHECK(r.passed());
    CHECK(r.table.rows.at(0).at(2) == "0");
    CHECK(r.table.rows.at(1).at(3) == "0");
}

TEST_CASE("outputs and thread independence") {
    auto c = default_config("lemma26_check");
    c["n"] = 3;
    set_num_threads(1);
    auto a = run_experiment("lemma26_check", c);
    set_num_threads(4);
    auto b = run_experiment("lemma26_check", c);
    set_num_threads(1);
    CHECK(a.table.csv() == b.table.csv());
    CHECK(a.passed());
    auto dir = std::filesystem::temp_directory_path() / "stokes-exp-test";
    std::filesystem::remove_all(dir);
    auto out = write_outputs(a, c, dir, 0.5);
    CHECK(std::filesystem::exists(out / "table.csv"));
    std::ifstream f(out / "summary.json");
    auto s = json::parse(f);
    CHECK(s.at("experiment") == "lemma26_check");
    CHECK(s.at("config") == c);
    CHECK(s.at("passed") == true);
    CHECK(s.at("verdicts").size() == 2);
    auto out2 = write_outputs(a, c, dir, 0.5);
    CHECK(out2 != out);
    std::filesystem::remove_all(dir);
}
