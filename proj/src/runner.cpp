#include "kobalab/runner.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "kobalab/automorphisms.hpp"
#include "kobalab/kobayashi.hpp"
#include "kobalab/lemma_lab.hpp"
#include "kobalab/rng.hpp"
#include "kobalab/scaling.hpp"

namespace kobalab {

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& message) {
  throw Error(ErrorKind::ConfigError, path + ": " + message);
}

template <class T>
T get(const nlohmann::json& doc, const std::string& key, const std::string& path, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    config_error(path + key, std::string("wrong type (") + e.what() + ")");
  }
}

// Vectors are lists of numbers or [re, im] pairs.
CVector parse_vector(const nlohmann::json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) config_error(path, "expected a non-empty array");
  CVector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& e = v[i];
    const std::string at = path + "[" + std::to_string(i) + "]";
    if (e.is_number()) {
      out(static_cast<Eigen::Index>(i)) = e.get<double>();
    } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
      out(static_cast<Eigen::Index>(i)) = Complex(e[0].get<double>(), e[1].get<double>());
    } else {
      config_error(at, "expected a number or [re, im]");
    }
  }
  return out;
}

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

CVector orbit_q(const ExperimentConfig& c, const DomainSpec& d) { return c.orbit.q ? *c.orbit.q : d.basepoint; }

CVector orbit_p(const ExperimentConfig& c, const DomainSpec& d) {
  if (c.orbit.p) return *c.orbit.p;
  return d.kind == DomainKind::Siegel ? CVector(CVector::Zero(c.dimension)) : basis_vector(c.dimension, 1);
}

// psi(x) = x + kappa x_1 x, with kappa chosen so ||d psi - I|| <= 0.9 eps on
// the (1 + 2 eps) r ball.
HoloMap quadratic_perturbation(int n, double kappa) {
  auto eval = [kappa](const CVector& x) -> CVector { return x + kappa * x(0) * x; };
  auto jac = [kappa, n](const CVector& x) -> COperator {
    COperator m = COperator::Identity(n, n) * (1.0 + kappa * x(0));
    m.col(0) += kappa * x;
    return m;
  };
  return HoloMap(MapKind::Custom, "quadratic_perturbation", eval, jac);
}

struct Context {
  const ExperimentConfig& config;
  std::filesystem::path out;
  Report& report;

  std::string csv(const std::string& name, const std::vector<std::string>& header,
                  const std::vector<std::vector<double>>& rows) {
    const std::string path = (out / name).string();
    write_csv(path, header, rows);
    report.add_artifact(path);
    return path;
  }
};

void verify_esti(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  NestedBallOptions nb;
  nb.configurations = c.configurations;
  nb.seed = c.seed;
  nb.jobs = c.jobs;
  ctx.report.merge(nested_ball_suite(c.dimension, nb), "suite.");

  // The configured pair (a, b) at the base point.
  const DomainSpec ball = make_ball(c.dimension);
  Stream rng(c.seed, streams::kExperiment, 1);
  const CVector q = orbit_q(c, ball);
  const HoloMap center = ball_mobius(q);
  const CVector x = center(std::tanh(c.a) * random_unit_vector(rng, c.dimension));
  const DomainSpec sub = make_transported(make_ball(c.dimension, std::tanh(c.b)), center, 1.0, "kobayashi_ball");
  LocalizationOptions lo;
  lo.seed = c.seed;
  const Report single = localization_check(ball, sub, q, x, c.b, lo);
  ctx.report.merge(single, "configured.");
  ctx.csv("esti_configured.csv", {"a", "b", "distance_sub", "distance_bound", "metric_ratio", "metric_factor"},
          {{c.a, c.b, single.at("distance_bound").value, single.notes().at("distance_bound").get<double>(),
            single.at("metric_bound").value, single.notes().at("metric_factor").get<double>()}});
}

void verify_disc(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const double cc = 1.0 - c.delta / 10.0;
  const DiscMap f = [cc](Complex z) { return z * (cc + z) / (1.0 + cc * z); };
  ctx.report.merge(disc_lemma_check(f, c.delta, c.eps), "blaschke.");
  const std::vector<DiscMap> family = blaschke_family(std::max(c.samples / 10, 20), c.seed);
  std::vector<std::vector<double>> rows;
  double prev = -1.0;
  for (double e : {0.9, 0.5, 0.2, 0.1, c.eps}) rows.push_back({e, empirical_delta(e, family)});
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  for (const auto& row : rows) {
    if (prev >= 0) ctx.report.add("delta_monotone_eps_" + std::to_string(row[0]), row[1], row[1] - prev);
    prev = row[1];
  }
  ctx.csv("disc_delta.csv", {"eps", "delta"}, rows);
}

void verify_ball(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  BallConvergenceOptions bo;
  bo.samples = c.samples;
  bo.seed = c.seed;
  bo.jobs = c.jobs;
  std::vector<double> sups;
  ctx.report.merge(ball_convergence_check(perturbed_family(c.dimension), c.r, c.j_max, bo, &sups), "");
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < sups.size(); ++k) rows.push_back({static_cast<double>(bo.j_min + k), sups[k]});
  ctx.csv("ball_sups.csv", {"j", "sup_deviation"}, rows);
}

void verify_final(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const double rr = 0.8;
  const double kappa = 0.9 * c.eps / (2.0 * (1.0 + 2.0 * c.eps) * rr);
  const HoloMap psi = quadratic_perturbation(c.dimension, kappa);
  SurjectivityOptions so;
  so.tol = c.tol;
  so.seed = c.seed;
  so.jobs = c.jobs;
  so.pairs = c.samples;
  ctx.report.merge(surjectivity_radius(psi, c.dimension, rr, c.eps, c.samples, so), "");
  Stream rng(c.seed, streams::kExperiment, 2);
  const CVector x = random_unit_vector(rng, c.dimension) * (0.99 * rr);
  const IterationTrace t = invert_by_iteration(psi, x, rr, c.eps, c.tol);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < t.residuals.size(); ++k) rows.push_back({static_cast<double>(k), t.residuals[k]});
  ctx.csv("final_trace.csv", {"k", "residual"}, rows);
  ctx.report.note("kappa", kappa);
}

void kobayashi_eval(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const DomainSpec d = build_domain(c);
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(c.samples));
  parallel_for(rows.size(), c.jobs, [&](std::size_t i) {
    Stream rng(c.seed, streams::kExperiment, 100 + i);
    CVector x = d.basepoint, q = d.basepoint;
    if (d.to_unit_ball && d.to_unit_ball->invertible()) {
      const HoloMap back = d.to_unit_ball->inverse();
      x = back(random_in_ball(rng, c.dimension, 0.95));
      q = back(random_in_ball(rng, c.dimension, 0.95));
    } else {
      for (int k = 0; k < 60; ++k) {
        x = d.basepoint + random_in_ball(rng, c.dimension, 0.9);
        if (d.contains(x)) break;
        x = d.basepoint;
      }
    }
    const CVector v = random_unit_vector(rng, c.dimension);
    const MetricEstimate m = metric_estimate(d, x, v);
    const auto exact = metric_exact(d, x, v);
    const auto dex = distance_exact(d, x, q);
    double dist_upper = nan();
    if (dex) {
      DistanceOptions o;
      dist_upper = distance(d, x, q, o).upper;
    }
    rows[i] = {static_cast<double>(i), x.norm(), m.lower, m.upper, exact ? *exact : nan(), dist_upper,
               dex ? *dex : nan()};
  });
  double metric_err = 0.0, dist_err = 0.0, order = 0.0;
  bool have_exact = false;
  for (const auto& r : rows) {
    order = std::max(order, (r[2] - r[3]) / r[3]);
    if (!std::isnan(r[4])) {
      have_exact = true;
      metric_err = std::max(metric_err, std::abs(r[3] - r[4]) / r[4]);
    }
    if (!std::isnan(r[6]) && r[6] > 1e-12) dist_err = std::max(dist_err, std::abs(r[5] - r[6]) / r[6]);
  }
  ctx.report.add("lower_le_upper", order, -order, 1e-9);
  if (have_exact) {
    ctx.report.add("metric_relative_error", metric_err, 0.01 - metric_err);
    ctx.report.add("distance_relative_error", dist_err, 0.01 - dist_err);
  }
  ctx.csv("kobayashi_samples.csv",
          {"i", "x_norm", "metric_lower", "metric_upper", "metric_exact", "distance_upper", "distance_exact"}, rows);
}

void scale_run(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const DomainSpec d = build_domain(c);
  NormalizeOptions no;
  no.chart_radius = c.chart_radius;
  no.seed = c.seed;
  const CVector p = orbit_p(c, d);
  const int count = c.j_max - c.orbit.first + 1;
  std::vector<ScalingStage> stages;
  std::optional<NormalizedDomain> normalized;
  std::vector<StageMetrics> metrics;
  std::vector<double> eps;

  const bool automorphic = !c.orbit.synthetic && (d.kind == DomainKind::Siegel || d.to_unit_ball);
  if (automorphic) {
    const OrbitSchedule orbit = orbit_to_boundary(d, orbit_q(c, d), p, c.orbit.rate, count, c.orbit.first);
    ScalingOptions so;
    so.normalize = no;
    so.seed = c.seed;
    so.jobs = c.jobs;
    const ScalingState state = run_scaling(d, orbit, so);
    DiagnosticsOptions dopt;
    dopt.seed = c.seed;
    if (state.size() >= 3) ctx.report.merge(scaling_diagnostics(state, dopt, &metrics), "scaling.");
    stages = state.stages;
    normalized = state.normalized;
    eps = state.eps;
  } else {
    normalized = normalize_at(d, p, no);
    StageOptions so;
    so.seed = c.seed;
    stages = build_synthetic_stages(*normalized, synthetic_orbit(d, p, c.orbit.rate, count, c.orbit.first,
                                                                 c.orbit.tilt),
                                    so);
  }
  for (const ScalingStage& s : stages) {
    const std::string tag = "_" + std::to_string(s.j);
    ctx.report.add("stage_c1" + tag, s.c1_margin, s.c1_margin, 1e-8);
    ctx.report.add("stage_c2" + tag, s.c2_residual, 1e-12 - s.c2_residual);
    ctx.report.add("stage_c3" + tag, s.c3_error, 1e-10 - s.c3_error);
  }
  std::vector<CloudRow> cloud;
  std::vector<double> dev;
  ctx.report.merge(hausdorff_to_siegel(*normalized, stages, c.samples, c.seed, &cloud, &dev), "hausdorff.");

  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const bool m = k < metrics.size();
    rows.push_back({static_cast<double>(stages[k].j), stages[k].r_j, stages[k].theta_j,
                    k < eps.size() ? eps[k] : nan(), m ? metrics[k].est_lo_margin : nan(),
                    m ? metrics[k].est_hi_margin : nan(), dev[k]});
  }
  ctx.csv("stages.csv", {"j", "r_j", "theta_j", "eps_j", "est_lo_margin", "est_hi_margin", "hausdorff_dev"}, rows);
  std::vector<std::vector<double>> crow;
  for (const CloudRow& r : cloud) crow.push_back({static_cast<double>(r.j), r.re_w1, r.norm_wprime_sq, r.deviation});
  ctx.csv("cloud.csv", {"j", "re_w1", "norm_wprime_sq", "deviation"}, crow);
}

void theorem_replay(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const DomainSpec d = build_domain(c);
  if (d.kind != DomainKind::Ball) config_error("domain.kind", "theorem-replay runs on the ball");
  const int count = c.j_max - c.orbit.first + 1;
  const OrbitSchedule orbit = orbit_to_boundary(d, orbit_q(c, d), orbit_p(c, d), c.orbit.rate, count, c.orbit.first);
  TheoremOptions to;
  to.a = c.a;
  to.r = c.r;
  to.samples = c.samples;
  to.surjectivity_samples = c.samples;
  to.scaling.normalize.chart_radius = c.chart_radius;
  to.scaling.normalize.seed = c.seed;
  to.scaling.seed = c.seed;
  to.diagnostics.seed = c.seed;
  to.seed = c.seed;
  to.jobs = c.jobs;
  TheoremArtifacts art;
  ctx.report.merge(main_theorem_pipeline(d, orbit, to, &art), "");
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < art.indices.size(); ++k)
    rows.push_back({static_cast<double>(art.indices[k]), art.r[k], art.theta[k], art.eps[k],
                    art.metrics[k].est_lo_margin, art.metrics[k].est_hi_margin, art.convergence_sup[k]});
  ctx.csv("stages.csv", {"j", "r_j", "theta_j", "eps_j", "est_lo_margin", "est_hi_margin", "convergence_sup"}, rows);
}

const std::vector<std::string>& commands() {
  static const std::vector<std::string> all{"verify-lemma esti", "verify-lemma disc", "verify-lemma ball",
                                            "verify-lemma final", "kobayashi-eval", "scale-run",
                                            "theorem-replay"};
  return all;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& doc) {
  if (!doc.is_object()) config_error("$", "config must be a JSON object");
  ExperimentConfig c;
  c.raw = doc;
  c.dimension = get<int>(doc, "dimension", "", c.dimension);
  if (doc.contains("domain")) {
    const auto& d = doc.at("domain");
    if (d.is_string()) {
      c.domain.kind = d.get<std::string>();
    } else if (d.is_object()) {
      c.domain.kind = get<std::string>(d, "kind", "domain.", c.domain.kind);
      c.domain.weights = get<std::vector<double>>(d, "weights", "domain.", {});
      c.domain.kappa = get<double>(d, "kappa", "domain.", c.domain.kappa);
    } else {
      config_error("domain", "expected a catalog tag or an object");
    }
  }
  if (doc.contains("orbit")) {
    const auto& o = doc.at("orbit");
    if (!o.is_object()) config_error("orbit", "expected an object");
    if (o.contains("q")) c.orbit.q = parse_vector(o.at("q"), "orbit.q");
    if (o.contains("p")) c.orbit.p = parse_vector(o.at("p"), "orbit.p");
    c.orbit.rate = get<double>(o, "rate", "orbit.", c.orbit.rate);
    c.orbit.first = get<int>(o, "first", "orbit.", c.orbit.first);
    c.orbit.synthetic = get<bool>(o, "synthetic", "orbit.", c.orbit.synthetic);
    c.orbit.tilt = get<double>(o, "tilt", "orbit.", c.orbit.tilt);
  }
  c.j_max = get<int>(doc, "j_max", "", c.j_max);
  c.chart_radius = get<double>(doc, "chart_radius", "", c.chart_radius);
  if (doc.contains("radii")) {
    const auto& r = doc.at("radii");
    if (!r.is_object()) config_error("radii", "expected an object");
    c.a = get<double>(r, "a", "radii.", c.a);
    c.b = get<double>(r, "b", "radii.", c.b);
    c.r = get<double>(r, "r", "radii.", c.r);
  }
  if (doc.contains("tolerances")) {
    const auto& t = doc.at("tolerances");
    if (!t.is_object()) config_error("tolerances", "expected an object");
    c.eps = get<double>(t, "eps", "tolerances.", c.eps);
    c.delta = get<double>(t, "delta", "tolerances.", c.delta);
    c.tol = get<double>(t, "tol", "tolerances.", c.tol);
  }
  c.samples = get<int>(doc, "samples", "", c.samples);
  c.configurations = get<int>(doc, "configurations", "", c.configurations);
  c.seed = get<std::uint64_t>(doc, "seed", "", c.seed);
  c.jobs = get<int>(doc, "jobs", "", c.jobs);
  c.output = get<std::string>(doc, "output", "", c.output);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("--config", "cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    config_error("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

void validate(const ExperimentConfig& c, const std::string& command) {
  if (std::find(commands().begin(), commands().end(), command) == commands().end())
    config_error("command", "unknown command '" + command + "'");
  if (c.dimension < 2) config_error("dimension", "N must be at least 2");
  const std::vector<std::string> kinds{"ball", "ellipsoid", "siegel", "perturbed_ball"};
  if (std::find(kinds.begin(), kinds.end(), c.domain.kind) == kinds.end())
    config_error("domain.kind", "unknown catalog tag '" + c.domain.kind + "'");
  for (std::size_t i = 0; i < c.domain.weights.size(); ++i)
    if (!(c.domain.weights[i] > 0)) config_error("domain.weights[" + std::to_string(i) + "]", "must be positive");
  if (!(std::abs(c.domain.kappa) < 1)) config_error("domain.kappa", "need |kappa| < 1");
  if (!(c.orbit.rate > 0 && c.orbit.rate < 1)) config_error("orbit.rate", "must lie in (0, 1)");
  if (c.orbit.first < 2) config_error("orbit.first", "stages start at j >= 2");
  if (c.orbit.q && c.orbit.q->size() != c.dimension) config_error("orbit.q", "length must equal dimension");
  if (c.orbit.p && c.orbit.p->size() != c.dimension) config_error("orbit.p", "length must equal dimension");
  if (c.j_max < c.orbit.first + 2) config_error("j_max", "need at least 3 stages");
  if (!(c.chart_radius > 0)) config_error("chart_radius", "must be positive");
  if (!(c.a > 0)) config_error("radii.a", "must be positive");
  if (!(c.b > 0)) config_error("radii.b", "must be positive");
  if (!(c.r > 0 && c.r < 1)) config_error("radii.r", "must lie in (0, 1)");
  if (!(c.eps > 0 && c.eps < 1)) config_error("tolerances.eps", "must lie in (0, 1)");
  if (!(c.delta > 0)) config_error("tolerances.delta", "must be positive");
  if (!(c.tol > 0)) config_error("tolerances.tol", "must be positive");
  if (c.samples < 1) config_error("samples", "must be positive");
  if (c.configurations < 1) config_error("configurations", "must be positive");
  if (c.jobs < 1) config_error("jobs", "must be positive");
  if (command == "verify-lemma esti" && !(c.b > c.a)) config_error("radii.b", "precondition b > a fails");
  if (command == "verify-lemma final" && !((1 + 2 * c.eps) * 0.8 < 1))
    config_error("tolerances.eps", "need (1 + 2 eps) 0.8 < 1");
  if (command == "theorem-replay" && c.domain.kind != "ball") config_error("domain.kind", "theorem-replay needs the ball");
}

DomainSpec build_domain(const ExperimentConfig& c) {
  if (c.domain.kind == "ball") return make_ball(c.dimension);
  if (c.domain.kind == "ellipsoid") return make_ellipsoid(c.dimension, c.domain.weights);
  if (c.domain.kind == "siegel") return make_siegel(c.dimension);
  if (c.domain.kind == "perturbed_ball") return make_perturbed_ball(c.dimension, c.domain.kappa);
  config_error("domain.kind", "unknown catalog tag '" + c.domain.kind + "'");
}

std::uint64_t config_hash(const nlohmann::json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : doc.dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

RunResult run(const ExperimentConfig& config, const std::string& command) {
  validate(config, command);
  std::string name = command;
  std::replace(name.begin(), name.end(), ' ', '_');
  std::replace(name.begin(), name.end(), '-', '_');
  RunResult result{Report(name), 0, ""};
  Report& report = result.report;

  nlohmann::json effective = config.raw;
  effective["seed"] = config.seed;
  effective["dimension"] = config.dimension;
  report.set_config(effective);
  report.set_metadata("command", command);
  report.set_metadata("config_hash", hex(config_hash(effective)));
  report.set_metadata("seed", config.seed);
  report.set_metadata("started", timestamp());

  const std::filesystem::path out(config.output);
  std::filesystem::create_directories(out);
  Context ctx{config, out, report};
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (command == "verify-lemma esti") verify_esti(ctx);
    else if (command == "verify-lemma disc") verify_disc(ctx);
    else if (command == "verify-lemma ball") verify_ball(ctx);
    else if (command == "verify-lemma final") verify_final(ctx);
    else if (command == "kobayashi-eval") kobayashi_eval(ctx);
    else if (command == "scale-run") scale_run(ctx);
    else if (command == "theorem-replay") theorem_replay(ctx);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    report.add_check("module_error", false);
    report.note("error", e.what());
  } catch (const std::exception& e) {
    report.add_check("module_error", false);
    report.note("error", e.what());
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.set_metadata("finished", timestamp());
  report.set_metadata("runtime_seconds", seconds);

  const std::filesystem::path entries = out / (name + "_entries.csv");
  {
    std::ofstream os(entries);
    os << report.entries_csv();
  }
  report.add_artifact(entries.string());
  result.report_path = (out / (name + "_report.json")).string();
  report.add_artifact(result.report_path);
  std::ofstream os(result.report_path);
  os << std::setw(2) << report.to_json() << "\n";
  result.exit_code = report.pass() ? 0 : 1;
  return result;
}

}  // namespace kobalab
