// Config parsing/serialization, CSV round-trips, and JSON emission.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "qplab/errors.hpp"
#include "qplab/frequency.hpp"
#include "qplab/io.hpp"

using namespace qplab;

TEST_CASE("config round-trips through serialization losslessly") {
  ExperimentConfig cfg;
  CHECK(parse_config(serialize_config(cfg)) == cfg);

  cfg.potential = "cosine";
  cfg.lambda = 0.37;
  cfg.energy = -1.25;
  cfg.frequency = "[0;1,2,1,2]";
  cfg.scan_lo = 1.0;
  cfg.scan_hi = 1.0625;
  cfg.grid_n = 512;
  cfg.bundle_tol = 2.5e-11;
  cfg.g0 = 5e-3;
  cfg.ratio = 4.0;
  cfg.count = 7;
  cfg.dir = "results";
  cfg.cache = false;
  CHECK(parse_config(serialize_config(cfg)) == cfg);

  CHECK(serialize_config(cfg) == serialize_config(cfg));
  CHECK(config_hash(cfg).size() == 12);
  CHECK(config_hash(cfg) != config_hash(ExperimentConfig{}));
  ExperimentConfig tweak = cfg;
  tweak.grid_n = 1024;
  CHECK(config_hash(tweak) != config_hash(cfg));
}

TEST_CASE("config text accepts comments and preserves cf strings") {
  const std::string text =
      "# run configuration\n"
      "[family]\n"
      "potential = peaked\n"
      "lambda = 30\n"
      "; the silver-like frequency below contains a semicolon\n"
      "frequency = [0;1,2,1,2]\n"
      "\n"
      "[sweep]\n"
      "count = 8\n";
  const ExperimentConfig cfg = parse_config(text);
  CHECK(cfg.potential == "peaked");
  CHECK(cfg.lambda == 30.0);
  CHECK(cfg.count == 8);
  CHECK(cfg.frequency == "[0;1,2,1,2]");
  CHECK(cfg.family_at(0.0).omega() ==
        doctest::Approx(Frequency::parse("[0;1,2,1,2]").value()));
}

TEST_CASE("config diagnostics name the offending field") {
  const auto message_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };

  CHECK(message_of("[family]\nsmoothing = 3\n").find("family.smoothing") !=
        std::string::npos);
  CHECK(message_of("[numerics]\ngrid_n = tiny\n").find("numerics.grid_n") !=
        std::string::npos);
  CHECK(message_of("[numerics]\ngrid_n = 4\n").find("numerics.grid_n") !=
        std::string::npos);
  CHECK(message_of("[sweep]\ncount = 3\n").find("sweep.count") !=
        std::string::npos);
  CHECK(message_of("[family]\npotential = sawtooth\n")
            .find("family.potential") != std::string::npos);
  CHECK(message_of("[family]\nfrequency = [1;2]\n")
            .find("family.frequency") != std::string::npos);
  CHECK(message_of("[family]\nscan_lo = 1\n").find("scan_lo") !=
        std::string::npos);
  CHECK(message_of("[engine]\njobs = 2\n").find("section") !=
        std::string::npos);
  CHECK(message_of("grid_n = 64\n").find("before any section") !=
        std::string::npos);
  CHECK(message_of("[output]\ncache = perhaps\n").find("output.cache") !=
        std::string::npos);
}

TEST_CASE("config exposes engine options, family, and gap ladder") {
  ExperimentConfig cfg;
  cfg.potential = "zero";
  cfg.energy = -3.0;
  cfg.grid_n = 128;
  cfg.bundle_tol = 1e-9;
  cfg.g0 = 8e-3;
  cfg.ratio = 2.0;
  cfg.count = 5;

  const EngineOptions o = cfg.engine();
  CHECK(o.grid_n == 128);
  CHECK(o.bundle_tol == 1e-9);
  CHECK(o.quad_tol == cfg.quad_tol);

  const ParameterFamily fam = cfg.family_at(0.5);
  CHECK(fam.omega() == doctest::Approx(Frequency::golden().value()));
  // V = 0 so the folded top-left entry is V - (E + t) = 2.5.
  CHECK(fam.at(0.3).a11 == doctest::Approx(2.5));
  CHECK(cfg.builder()(0.5).at(0.3).a11 == doctest::Approx(2.5));

  const std::vector<double> gs = cfg.gaps();
  REQUIRE(gs.size() == 5);
  CHECK(gs[0] == 8e-3);
  CHECK(gs[4] == doctest::Approx(5e-4));
}

TEST_CASE("sweep csv round-trips records including failures") {
  std::vector<SweepRecord> recs(2);
  recs[0].t = 0.99;
  recs[0].gap = 1e-2;
  recs[0].d_min = 0.19809891064284339;
  recs[0].theta_c = 0.42702484;
  recs[0].L = 0.0997516;
  recs[0].dLdt_lemma = -5.0239;
  recs[0].dLdt_fd = -5.0241;
  recs[0].err_L = 1e-10;
  recs[0].err_dLdt = 2e-4;
  recs[0].status = "ok";
  recs[1].t = 1.04;
  recs[1].gap = 1e-3;
  recs[1].status = "non_convergence";

  const std::string csv = sweep_csv(recs);
  CHECK(csv.find("t,gap,d_min,theta_c,L,dLdt_lemma,dLdt_fd,err_L,err_dLdt,"
                 "status\n") == 0);
  CHECK(csv == sweep_csv(recs));  // deterministic bytes

  const std::vector<SweepRecord> back = parse_sweep_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].t == recs[0].t);
  CHECK(back[0].d_min == recs[0].d_min);
  CHECK(back[0].theta_c == recs[0].theta_c);
  CHECK(back[0].dLdt_lemma == recs[0].dLdt_lemma);
  CHECK(back[0].status == "ok");
  CHECK(back[0].ok());
  CHECK(std::isnan(back[1].d_min));
  CHECK(back[1].status == "non_convergence");
  CHECK(!back[1].ok());

  CHECK_THROWS_AS(parse_sweep_csv("wrong,header\n"), ConfigError);
  CHECK_THROWS_AS(
      parse_sweep_csv(sweep_csv({}) + "1,2,3\n"), ConfigError);
}

TEST_CASE("bundle csv merges the dip mesh in theta order") {
  BundlePair pair;
  pair.grid = {0.0, 0.5};
  pair.r_u = {2.0, 2.5};
  pair.r_s = {0.5, 0.4};

  const std::string plain = bundles_csv(pair, nullptr);
  CHECK(plain ==
        "theta,r_u,r_s,d\n"
        "0,2,0.5,1.5\n"
        "0.5,2.5,0.40000000000000002,2.1000000000000001\n");

  DifferenceField field;
  field.d = {1.5, 2.1};
  field.mesh_theta = {0.25, 0.5};  // 0.5 duplicates a grid node
  field.mesh_ru = {2.2, 2.5};
  field.mesh_rs = {0.45, 0.4};
  const std::string merged = bundles_csv(pair, &field);
  CHECK(merged.find("\n0.25,") != std::string::npos);
  // Duplicate theta emitted once.
  CHECK(merged.find("\n0.5,") == merged.rfind("\n0.5,"));
}

TEST_CASE("json documents carry the pinned record shapes") {
  LyapunovEstimate growth{0.96242365, 1000000, 3e-7, "norm_growth"};
  LyapunovEstimate bundle{0.96242363, 4096, 1e-9, "bundle_integral"};
  DerivativeEstimate lemma{-0.4472, 1e-8, 55, "lemma31"};
  DerivativeEstimate fd{-0.4473, 2e-6, 0, "central_difference"};

  const nlohmann::json le =
      nlohmann::json::parse(le_json(-3.0, &bundle, growth, &lemma, &fd));
  CHECK(le["t"] == -3.0);
  CHECK(le["L"] == 0.96242363);
  CHECK(le["L_method"] == "bundle_integral");
  CHECK(le["dLdt"] == -0.4472);
  CHECK(le["estimates"]["norm_growth"]["L"] == 0.96242365);
  CHECK(le["agreement"].get<double>() == doctest::Approx(2e-8));

  const nlohmann::json le2 =
      nlohmann::json::parse(le_json(-1.0, nullptr, growth, nullptr, nullptr));
  CHECK(le2["L_method"] == "norm_growth");
  CHECK(le2["dLdt"].is_null());
  CHECK(le2["estimates"]["bundle_integral"].is_null());

  EdgeEstimate edge;
  edge.t0 = -2.0;
  edge.t_uh = -2.0000001;
  edge.t_non_uh = -1.9999999;
  edge.width = 2e-7;
  edge.certificates.resize(2);
  edge.certificates[0].t = -2.5;
  edge.certificates[0].is_uh = true;
  edge.certificates[1].t = -1.5;
  edge.certificates[1].failure = "non_convergence";
  const nlohmann::json ej = nlohmann::json::parse(edge_json(edge));
  CHECK(ej["t0"] == -2.0);
  CHECK(ej["certificates"].size() == 2);
  CHECK(ej["certificates"][1]["failure"] == "non_convergence");

  AssumptionReport rep;
  rep.d_min = 1e-3;
  rep.theta_c = 0.42;
  rep.growth_rate_a = 0.0033;
  rep.violations.push_back({"A2b", 0.80, 0, "tied competitor"});
  const nlohmann::json vj = nlohmann::json::parse(verify_json(1.0, rep));
  CHECK(vj["t"] == 1.0);
  CHECK(vj["growth_rate_a"] == 0.0033);
  CHECK(vj["violations"][0]["clause"] == "A2b");

  SweepSummary s;
  s.t0 = 1.0037;
  s.records.resize(3);
  s.records[0].status = "ok";
  s.records[1].status = "ok";
  s.records[2].status = "non_convergence";
  PowerLawFit fit;
  fit.exponent = 0.684;
  fit.prefactor = 17.0;
  fit.r_squared = 0.999;
  fit.gap_min = 1e-5;
  fit.gap_max = 1e-2;
  fit.n_points = 10;
  s.dmin_fit = fit;
  s.digests.emplace_back(1e-4, rep);
  const nlohmann::json sj = nlohmann::json::parse(summary_json(s));
  CHECK(sj["t0"] == 1.0037);
  CHECK(sj["n_records"] == 3);
  CHECK(sj["n_ok"] == 2);
  CHECK(sj["fits"]["d_min"]["exponent"] == 0.684);
  CHECK(sj["fits"]["holder"].is_null());
  CHECK(sj["theorem_bound"].is_null());
  CHECK(sj["assumptions"][0]["gap"] == 1e-4);
  CHECK(sj["assumptions"][0]["n_violations"] == 1);
}
