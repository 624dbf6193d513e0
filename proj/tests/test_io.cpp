#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "chicap/chicap.hpp"
#include "chicap/io.hpp"

using namespace chicap;
using chicap::io::json;

TEST(Json, DoublesRoundTripExactly) {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, 0.0}) {
    const std::string s = io::format_double(x);
    EXPECT_EQ(std::stod(s), x) << s;
  }
  EXPECT_EQ(io::dump(json::parse("[1.0, 2]"), -1), "[1,2]");
}

TEST(Json, DumpIsStableAndSorted) {
  const json j = json::parse(R"({"b": 0.1, "a": [1, {"z": true, "y": null}], "c": "x"})");
  const std::string once = io::dump(j);
  EXPECT_EQ(once, io::dump(json::parse(once)));
  EXPECT_LT(once.find("\"a\""), once.find("\"b\""));
  EXPECT_NE(once.find("0.10000000000000001"), std::string::npos);
}

TEST(Json, InfinityIsAString) {
  EXPECT_EQ(io::ext_to_json(ExtReal::infinity()), json("inf"));
  EXPECT_EQ(io::ext_to_json(ExtReal(0.5)), json(0.5));
}

TEST(Channel, RoundTrip) {
  random::Rng rng(1);
  const Channel ch = random::channel(3, 2, 2, rng);
  const Channel back = io::channel_from_json(json::parse(io::dump(io::channel_to_json(ch))));
  ASSERT_EQ(back.kraus().size(), ch.kraus().size());
  for (std::size_t k = 0; k < ch.kraus().size(); ++k) EXPECT_EQ(back.kraus()[k], ch.kraus()[k]);

  const Channel cl = classical_channel(random::stochastic_matrix(2, 3, rng));
  const Channel cl_back = io::channel_from_json(json::parse(io::dump(io::channel_to_json(cl))));
  ASSERT_TRUE(cl_back.stochastic().has_value());
  EXPECT_EQ(*cl_back.stochastic(), *cl.stochastic());
}

TEST(Channel, ParseForms) {
  EXPECT_EQ(io::channel_from_json(json::parse(R"({"identity": 3})")).dim_out(), 3);
  const Channel bsc = io::channel_from_json(json::parse(R"({"stochastic": [[0.9, 0.2], [0.1, 0.8]]})"));
  EXPECT_EQ(bsc.kind(), ChannelKind::classical);
  // plain reals are accepted for real Kraus entries
  const Channel k = io::channel_from_json(json::parse(R"({"kraus": [[[1, 0], [0, 1]]]})"));
  EXPECT_EQ(k.dim_in(), 2);
}

TEST(Channel, ParseErrors) {
  EXPECT_THROW(io::channel_from_json(json::parse("[]")), ParseError);
  EXPECT_THROW(io::channel_from_json(json::parse(R"({"identity": 0})")), ParseError);
  EXPECT_THROW(io::channel_from_json(json::parse(R"({"kraus": [[[1]]], "stochastic": [[1]]})")), ParseError);
  EXPECT_THROW(io::channel_from_json(json::parse(R"({"kraus": [[[0.5, 0], [0, 0.5]]]})")), NotTracePreserving);
  EXPECT_THROW(io::channel_from_json(json::parse(R"({"stochastic": [[0.9, 0.1], [0.3, 0.7]]})")), NotStochastic);
  EXPECT_THROW(io::channel_from_json(json::parse(R"({"stochastic": [[1, "x"]]})")), ParseError);
}

TEST(Ensemble, RoundTrip) {
  random::Rng rng(2);
  const Ensemble e = random::ensemble(3, 4, rng);
  const Ensemble back = io::ensemble_from_json(json::parse(io::dump(io::ensemble_to_json(e))));
  ASSERT_EQ(back.size(), e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    EXPECT_EQ(back.weights()[i], e.weights()[i]);
    EXPECT_EQ(back.states()[i].matrix(), e.states()[i].matrix());
  }
}

TEST(Ensemble, VectorFormAndErrors) {
  const Ensemble e = io::ensemble_from_json(json::parse(R"({"weights": [0.5, 0.5], "vectors": [[1, 0], [0, [0, 1]]]})"));
  EXPECT_NEAR(barycenter(e).matrix()(1, 1).real(), 0.5, 1e-15);
  EXPECT_THROW(io::ensemble_from_json(json::parse(R"({"weights": [1]})")), ParseError);
  EXPECT_THROW(io::ensemble_from_json(json::parse(R"({"weights": [0.5, 0.4], "vectors": [[1, 0], [0, 1]]})")),
               InvalidEnsemble);
  EXPECT_THROW(io::ensemble_from_json(json::parse(R"({"weights": [1], "states": [[[0.5, 0], [0, 0.6]]]})")), NonState);
}

TEST(Constraint, RoundTripAndErrors) {
  const HConstraint h({0.0, 1.0, 2.5}, 0.75);
  const HConstraint back = io::constraint_from_json(json::parse(io::dump(io::constraint_to_json(h))));
  EXPECT_EQ(back.energies(), h.energies());
  EXPECT_EQ(back.bound(), h.bound());
  EXPECT_THROW(io::constraint_from_json(json::parse(R"({"energies": [0, 1]})")), ParseError);
  EXPECT_THROW(io::constraint_from_json(json::parse(R"({"energies": [1, 0], "bound": 1})")), InvalidConstraint);
}

TEST(Report, SerializesAllFields) {
  const CapacityReport r = solve_capacity(Channel::identity(2), std::nullopt);
  const json j = io::report_to_json(r);
  for (const char* key : {"chi_value", "certificate_gap", "constraint_active", "lagrange_multiplier", "mean_energy",
                          "converged", "iterations", "ensemble", "trace"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_TRUE(j["mean_energy"].is_null());
  EXPECT_EQ(io::dump(j), io::dump(io::report_to_json(solve_capacity(Channel::identity(2), std::nullopt))));
  const std::string csv = io::trace_csv(r.trace);
  EXPECT_EQ(csv.rfind("iter,chi,gap,mean_energy,support_size\n", 0), 0u);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
}

TEST(Report, CertificateInfinityAndStatus) {
  const Certificate c = certify_optimality(Channel::identity(2), Ensemble::single(DensityMatrix::basis(2, 0)), std::nullopt);
  const json j = io::certificate_to_json(c);
  EXPECT_EQ(j["gap"], "inf");
  EXPECT_EQ(j["status"], "not_optimal");
}

TEST(Report, CounterexampleCsv) {
  const auto pts = counterexample::h_sequence(100, {1, 10, 100});
  const std::string csv = io::counterexample_csv(pts);
  EXPECT_EQ(csv.rfind("n,q_n,h_value,one_minus_h,residual\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Files, ReadErrorsAreParseErrors) {
  EXPECT_THROW(io::read_json_file("/nonexistent/file.json"), ParseError);
  const auto path = std::filesystem::temp_directory_path() / "chicap_bad.json";
  io::write_text_file(path.string(), "{ not json");
  EXPECT_THROW(io::read_json_file(path.string()), ParseError);
  io::write_text_file(path.string(), R"({"identity": 2})");
  EXPECT_EQ(io::channel_from_json(io::read_json_file(path.string())).dim_in(), 2);
  std::filesystem::remove(path);
}
