#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "glmclust/growth.hpp"
#include "glmclust/simulation.hpp"

using namespace glmclust;

namespace {

constexpr int kInputExit = 2;
constexpr int kNumericalExit = 3;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct SeriesArgs {
  std::string input;
  std::string t0 = "2020-01-11";
  std::string start = "2020-02-24";
  std::string end;
};

struct ClusterArgs {
  std::string family = "quasipoisson";
  std::optional<int> k;
  int k_max = 0;
  std::string criterion = "bic";
  int restarts = 10;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "txt";
};

void add_series_flags(CLI::App* cmd, SeriesArgs& a) {
  cmd->add_option("--input", a.input, "CSV with columns date,region,new_cases")->required();
  cmd->add_option("--t0", a.t0, "Origin date; rows on or before it are dropped")->capture_default_str();
  cmd->add_option("--start", a.start, "First date kept (empty keeps everything after t0)")->capture_default_str();
  cmd->add_option("--end", a.end, "Last date kept");
}

void add_cluster_flags(CLI::App* cmd, ClusterArgs& a) {
  cmd->add_option("--family", a.family, "gaussian, poisson or quasipoisson")->capture_default_str();
  auto* k = cmd->add_option("--k", a.k, "Fixed number of clusters");
  cmd->add_option("--k-max", a.k_max, "Largest k considered (default min(10, N-1))")->excludes(k);
  cmd->add_option("--criterion", a.criterion, "aic, bic or a positive kappa")->capture_default_str();
  cmd->add_option("--restarts", a.restarts, "Engine restarts per k")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Random seed")->capture_default_str();
  cmd->add_option("--format", a.format, "csv or txt")->check(CLI::IsMember({"csv", "txt"}))->capture_default_str();
}

std::vector<RegionSeries> load(const SeriesArgs& a) {
  DateWindow window;
  if (!a.start.empty()) window.start = parse_date(a.start);
  if (!a.end.empty()) window.end = parse_date(a.end);
  auto loaded = load_series(a.input, parse_date(a.t0), window);
  if (loaded.clamped_negative > 0)
    std::cerr << "warning: " << loaded.clamped_negative << " negative counts clamped to 0\n";
  return std::move(loaded.regions);
}

ClusterOptions options_from(const ClusterArgs& a) {
  ClusterOptions o;
  o.family = family_from_name(a.family);
  o.k = a.k;
  o.k_max = a.k_max;
  o.criterion = parse_criterion(a.criterion);
  o.n_restarts = a.restarts;
  o.rng_seed = a.seed;
  return o;
}

int cmd_fit(const SeriesArgs& s, const std::string& model_name, const std::string& format) {
  const Date t0 = parse_date(s.t0);
  const GrowthModel model = growth_model_from_name(model_name);
  const auto series = load(s);
  const bool csv = format == "csv";
  if (csv)
    std::cout << "region,model,n,mu,se_mu,alpha,se_alpha,beta,se_beta,dispersion,r_squared,peak\n";
  else
    std::printf("%-16s %5s %10s %10s %10s %10s %10s %10s %8s  %s\n", "region", "n", "mu", "alpha", "se_alpha", "beta",
                "se_beta", "phi", "R^2", "peak");
  for (const auto& r : series) {
    const auto g = fit_growth(r, model, t0);
    const bool gamma = model == GrowthModel::Gamma;
    const std::string peak = g.peak_date ? format_date(*g.peak_date) : (g.out_of_control() ? "x" : "");
    if (csv) {
      std::cout << r.region << ',' << model_name << ',' << g.n << ',' << num(g.mu) << ',' << num(g.se_mu) << ','
                << (gamma ? num(g.alpha) : "") << ',' << (gamma ? num(g.se_alpha) : "") << ',' << num(g.beta) << ','
                << num(g.se_beta) << ',' << num(g.dispersion) << ',' << num(g.r_squared) << ',' << peak << '\n';
    } else {
      std::printf("%-16s %5d %10s %10s %10s %10s %10s %10s %8.4f  %s\n", r.region.c_str(), g.n, num(g.mu).c_str(),
                  gamma ? num(g.alpha).c_str() : "-", gamma ? num(g.se_alpha).c_str() : "-", num(g.beta).c_str(),
                  num(g.se_beta).c_str(), num(g.dispersion).c_str(), g.r_squared, peak.c_str());
    }
  }
  return 0;
}

void print_assignment(const ClusterReport& report, bool csv) {
  if (csv) {
    std::cout << "region,cluster,mu\n";
    for (std::size_t i = 0; i < report.series.size(); ++i)
      std::cout << report.series[i].region << ',' << report.assignment[i] + 1 << ',' << num(report.region_mu[i])
                << '\n';
    std::cout << "\ncluster,representative,size,alpha,se_alpha,beta,se_beta,peak\n";
    for (const auto& c : report.clusters)
      std::cout << c.cluster + 1 << ',' << c.representative << ',' << c.members.size() << ',' << num(c.alpha) << ','
                << num(c.se_alpha) << ',' << num(c.beta) << ',' << num(c.se_beta) << ','
                << (c.peak ? format_date(*c.peak) : "x") << '\n';
    return;
  }
  std::printf("k = %d, partial R^2 = %.4f, dispersion = %s\n\n", report.k, report.partial_r_squared,
              num(report.dispersion).c_str());
  std::printf("%-7s %-16s %4s %10s %10s %10s %10s  %s\n", "cluster", "representative", "size", "alpha", "se_alpha",
              "beta", "se_beta", "peak");
  for (const auto& c : report.clusters)
    std::printf("%-7d %-16s %4zu %10s %10s %10s %10s  %s\n", c.cluster + 1, c.representative.c_str(), c.members.size(),
                num(c.alpha).c_str(), num(c.se_alpha).c_str(), num(c.beta).c_str(), num(c.se_beta).c_str(),
                c.peak ? format_date(*c.peak).c_str() : "x");
  std::printf("\n%-16s %7s %10s\n", "region", "cluster", "mu");
  for (std::size_t i = 0; i < report.series.size(); ++i)
    std::printf("%-16s %7d %10s\n", report.series[i].region.c_str(), report.assignment[i] + 1,
                num(report.region_mu[i]).c_str());
}

void print_trace(const GICTrace& t, bool csv) {
  if (csv) {
    std::cout << "k,criterion,kappa,score,dispersion,deviance,selected\n";
  } else {
    std::printf("%3s %-9s %10s %14s %12s %14s\n", "k", "criterion", "kappa", "score", "dispersion", "deviance");
  }
  for (std::size_t i = 0; i < t.k_values.size(); ++i) {
    const bool sel = t.k_values[i] == t.selected_k;
    const std::string disp = t.dispersions[i] ? num(*t.dispersions[i]) : "";
    if (csv)
      std::cout << t.k_values[i] << ',' << t.criterion_name << ',' << num(t.kappa) << ',' << num(t.scores[i]) << ','
                << disp << ',' << num(t.deviances[i]) << ',' << (sel ? 1 : 0) << '\n';
    else
      std::printf("%3d %-9s %10s %14s %12s %14s%s\n", t.k_values[i], t.criterion_name.c_str(), num(t.kappa).c_str(),
                  num(t.scores[i]).c_str(), disp.empty() ? "-" : disp.c_str(), num(t.deviances[i]).c_str(),
                  sel ? "  *" : "");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustering of generalized linear models by nested-model tests"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file; simulate options go under a [simulate] section");

  SeriesArgs series;
  ClusterArgs cluster;
  std::string model = "gamma";
  std::string fit_format = "txt";

  auto* fit = app.add_subcommand("fit", "Fit a growth model to every region");
  add_series_flags(fit, series);
  fit->add_option("--model", model, "exp or gamma")->check(CLI::IsMember({"exp", "gamma"}))->capture_default_str();
  fit->add_option("--format", fit_format, "csv or txt")->check(CLI::IsMember({"csv", "txt"}))->capture_default_str();

  auto* clus = app.add_subcommand("cluster", "Cluster regions on their growth coefficients");
  add_series_flags(clus, series);
  add_cluster_flags(clus, cluster);

  auto* selk = app.add_subcommand("select-k", "Information-criterion trace over k");
  add_series_flags(selk, series);
  add_cluster_flags(selk, cluster);

  auto* rep = app.add_subcommand("report", "Cluster regions and write the report files");
  add_series_flags(rep, series);
  add_cluster_flags(rep, cluster);
  rep->add_option("--out", cluster.out, "Output directory")->required();

  SimConfig sim;
  std::string sim_family = "gaussian";
  std::string sim_format = "txt";
  std::string sim_out;
  std::string sim_criteria = "aic,bic";
  auto* simc = app.add_subcommand("simulate", "Run a simulation study");
  simc->add_option("--family", sim_family, "gaussian, poisson or quasipoisson")->capture_default_str();
  simc->add_option("--k", sim.k_true, "True number of clusters")->capture_default_str();
  simc->add_option("--c", sim.c, "Objects per cluster")->capture_default_str();
  simc->add_option("--n0", sim.n0, "Observations per object")->capture_default_str();
  simc->add_option("--sigma", sim.sigma, "Noise standard deviation (Gaussian)")->capture_default_str();
  simc->add_option("--tau", sim.tau, "Regime label for log-linear designs")->capture_default_str();
  simc->add_option("--reps", sim.replications, "Replications")->capture_default_str();
  simc->add_option("--seed", sim.rng_seed, "Random seed")->capture_default_str();
  simc->add_option("--restarts", sim.n_restarts, "Engine restarts per k")->capture_default_str();
  simc->add_option("--k-max", sim.k_max, "Largest k considered (default min(10, N-1))");
  simc->add_option("--criterion", sim_criteria, "Comma-separated criteria")->capture_default_str();
  simc->add_option("--format", sim_format, "csv or txt")->check(CLI::IsMember({"csv", "txt"}))->capture_default_str();
  simc->add_option("--out", sim_out, "Write the table to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputExit;
  }

  try {
    if (fit->parsed()) return cmd_fit(series, model, fit_format);

    if (clus->parsed() || selk->parsed() || rep->parsed()) {
      const Date t0 = parse_date(series.t0);
      const auto regions = load(series);
      auto options = options_from(cluster);
      if (selk->parsed()) options.k.reset();
      const auto report = cluster_regions(regions, t0, options);
      const bool csv = cluster.format == "csv";
      if (selk->parsed()) {
        print_trace(*report.trace, csv);
      } else if (clus->parsed()) {
        print_assignment(report, csv);
      } else {
        emit_report(report, cluster.out);
        std::cout << "wrote report for " << report.series.size() << " regions, k = " << report.k << " to "
                  << cluster.out << '\n';
      }
      return 0;
    }

    if (simc->parsed()) {
      sim.family = family_from_name(sim_family);
      sim.criteria.clear();
      std::size_t pos = 0;
      while (pos <= sim_criteria.size()) {
        const auto comma = sim_criteria.find(',', pos);
        const auto token = sim_criteria.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!token.empty()) sim.criteria.push_back(parse_criterion(token));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      if (sim.criteria.empty()) throw InputError("no criteria given");
      const auto report = run_study(sim);
      const auto format = sim_format == "csv" ? TableFormat::Csv : TableFormat::Text;
      if (sim_out.empty())
        emit_table({report}, format, std::cout);
      else
        emit_table({report}, format, sim_out);
      std::cerr << report.completed << " replications in " << num(report.seconds) << " s";
      if (report.failed > 0) std::cerr << ", " << report.failed << " failed";
      std::cerr << '\n';
      return 0;
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputExit;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputExit;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalExit;
  }
  return 0;
}
