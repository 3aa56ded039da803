#include <cstdio>
#include <fstream>
#include <sstream>

#include "sdg/experiments.hpp"
#include "sdg/svg_plot.hpp"

namespace sdg {

namespace {

namespace fs = std::filesystem;

class Writer {
 public:
  explicit Writer(RunSummary& summary) : summary_(summary) {}

  std::ofstream open(const fs::path& path) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    summary_.files.push_back(path);
    return out;
  }

  void text(const fs::path& path, const std::string& body) { open(path) << body; }

 private:
  RunSummary& summary_;
};

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string e3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

LinePlot error_plot(const LadderResult& lad, const std::string& title) {
  LinePlot plot;
  plot.title = title;
  plot.x_label = "degrees of freedom";
  plot.y_label = "L2 error at final time";
  plot.log_x = plot.log_y = true;
  for (int f = 0; f < 5; ++f) {
    PlotSeries s;
    s.label = field_names[f];
    for (const auto& l : lad.levels) {
      s.x.push_back(l.report.dofs);
      s.y.push_back(l.report.final_time[f]);
    }
    plot.series.push_back(std::move(s));
  }
  return plot;
}

void ladder_outputs(Writer& w, const fs::path& dir, const LadderResult& lad, bool plots, const std::string& title,
                    std::ostringstream& text) {
  {
    auto out = w.open(dir / "errors.csv");
    write_errors_csv(out, lad);
  }
  {
    auto out = w.open(dir / "rates.csv");
    write_rates_csv(out, lad);
  }
  if (plots) w.text(dir / "errors.svg", error_plot(lad, title).svg());
  text << "  " << title << '\n' << "    N     h          ";
  for (auto n : field_names) text << n << std::string(11 - std::string(n).size(), ' ');
  text << '\n';
  for (const auto& l : lad.levels) {
    char head[48];
    std::snprintf(head, sizeof head, "    %-5d %-10.4g ", l.n, l.report.h);
    text << head;
    for (double e : l.report.final_time) text << e3(e) << "  ";
    text << '\n';
  }
  text << "    rate (finest pair)  ";
  for (const auto& r : lad.rates) text << f2(r.pairwise.back()) << std::string(7, ' ');
  text << '\n';
}

std::string c0_dir(double c0) { return "c0_" + g(c0); }

}  // namespace

RunSummary run_experiment(const ExperimentConfig& c) {
  RunSummary sum;
  Writer w(sum);
  std::ostringstream text;
  text << experiment_name(c.kind) << " -> " << c.output.string() << '\n';
  auto merge = [&](const std::vector<std::string>& ws) {
    for (const auto& x : ws)
      if (std::find(sum.warnings.begin(), sum.warnings.end(), x) == sum.warnings.end()) sum.warnings.push_back(x);
  };

  switch (c.kind) {
    case ExperimentKind::convergence: {
      for (double c0 : c.c0_values) {
        const auto mc = ManufacturedCase::smooth(c.material(c0));
        const auto lad = run_ladder(mc, c.ladder);
        merge(lad.warnings);
        const fs::path dir = c.c0_values.size() > 1 ? c.output / c0_dir(c0) : c.output;
        ladder_outputs(w, dir, lad, c.plots,
                       std::string(mesh_family_name(c.ladder.family)) + " meshes, c0 = " + g(c0), text);
      }
      break;
    }
    case ExperimentKind::shishkin: {
      for (double c0 : c.c0_values) {
        const auto mc = ManufacturedCase::layered(c.material(c0), c.ladder.theta);
        const fs::path base = c.c0_values.size() > 1 ? c.output / c0_dir(c0) : c.output;
        LadderSetup uni = c.ladder;
        uni.family = MeshFamily::square;
        LadderSetup shk = c.ladder;
        shk.family = MeshFamily::shishkin;
        const auto a = run_ladder(mc, uni);
        const auto b = run_ladder(mc, shk);
        merge(a.warnings);
        merge(b.warnings);
        ladder_outputs(w, base / "uniform", a, c.plots, "uniform meshes, theta = " + g(c.ladder.theta), text);
        ladder_outputs(w, base / "shishkin", b, c.plots, "shishkin meshes, theta = " + g(c.ladder.theta), text);
        if (c.plots) {
          LinePlot cmp;
          cmp.title = "uniform vs layer-adapted, theta = " + g(c.ladder.theta);
          cmp.x_label = "degrees of freedom";
          cmp.y_label = "L2 error at final time";
          cmp.log_x = cmp.log_y = true;
          for (int f : {1, 4})
            for (const auto* lad : {&a, &b}) {
              PlotSeries s;
              s.label = std::string(field_names[f]) + (lad == &a ? " uniform" : " shishkin");
              for (const auto& l : lad->levels) {
                s.x.push_back(l.report.dofs);
                s.y.push_back(l.report.final_time[f]);
              }
              cmp.series.push_back(std::move(s));
            }
          w.text(base / "comparison.svg", cmp.svg());
        }
      }
      break;
    }
    case ExperimentKind::cantilever: {
      const auto res = run_cantilever(c.cantilever);
      merge(res.warnings);
      LinePlot plot;
      plot.title = "pressure along horizontal lines";
      plot.x_label = "x";
      plot.y_label = "p";
      for (double y : c.cantilever.lines) {
        auto out = w.open(c.output / ("profile_y" + g(y) + ".csv"));
        out << profile_csv_header << '\n';
        text << "  y = " << g(y) << ":";
        for (const auto& [t, prof] : res.profiles) {
          if (prof.y != y) continue;
          write_profile_csv(out, t, prof);
          text << " t = " << g(t) << " extrema " << prof.extrema << ";";
          plot.series.push_back({"y=" + g(y) + " t=" + g(t), prof.x, prof.p});
        }
        text << '\n';
      }
      text << "  worst dual-cell balance residual " << e3(res.conservation) << '\n';
      if (c.plots) w.text(c.output / "profiles.svg", plot.svg());
      break;
    }
    case ExperimentKind::compaction: {
      const auto res = run_compaction(c.compaction);
      merge(res.warnings);
      {
        auto out = w.open(c.output / "hashes.csv");
        out << hashes_csv_header << '\n';
        for (std::size_t n = 0; n < res.states.size(); ++n) {
          char hex[20];
          std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(res.hashes[n]));
          out << n << ',' << std::scientific << res.states[n].t << ',' << hex << '\n';
        }
      }
      for (std::size_t n = 0; n < res.states.size(); ++n) {
        char name[32];
        std::snprintf(name, sizeof name, "state_%02zu.txt", n);
        auto out = w.open(c.output / "checkpoints" / name);
        write_checkpoint(out, res.states[n]);
      }
      // pressure through the lower aquifer and the confining layer at the final time
      const StaggeredMesh mesh(generate_basin(c.compaction.basin));
      const SpaceSet sp(mesh, 1);
      LinePlot plot;
      plot.title = "pressure at the final time";
      plot.x_label = "x [m]";
      plot.y_label = "p";
      const double top = basin_depth(c.compaction.basin, 0.0);
      for (double y : {top - c.compaction.basin.upper_aquifer - 0.5 * c.compaction.basin.confining, 200.0}) {
        const auto prof = oscillation_profile(sp, res.states.back().p, y);
        auto out = w.open(c.output / ("profile_y" + g(y) + ".csv"));
        out << profile_csv_header << '\n';
        write_profile_csv(out, res.states.back().t, prof);
        plot.series.push_back({"y=" + g(y), prof.x, prof.p});
      }
      if (c.plots) w.text(c.output / "pressure.svg", plot.svg());
      text << "  " << res.states.size() - 1 << " steps to t = " << g(res.states.back().t) << ", final hash ";
      char hex[20];
      std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(res.hashes.back()));
      text << hex << '\n';
      break;
    }
    case ExperimentKind::fixed_stress_compare: {
      FixedStressConfig cfg = c.ladder.fixed_stress;
      LinePlot plot;
      plot.title = "fixed-stress increments";
      plot.x_label = "iteration";
      plot.y_label = "||p^i - p^(i-1)||";
      plot.log_y = true;
      for (double c0 : c.c0_values) {
        const auto mc = ManufacturedCase::smooth(c.material(c0));
        const auto cmp = compare_fixed_stress(mc, c.ladder.family, c.compare_level, c.ladder.final_time, c.ladder.dt,
                                              cfg, c.ladder.theta);
        merge(cmp.warnings);
        const fs::path dir = c.c0_values.size() > 1 ? c.output / c0_dir(c0) : c.output;
        {
          auto out = w.open(dir / "history.csv");
          write_history_csv(out, cmp);
        }
        int violations = 0, iters = 0;
        double worst = 0.0;
        PlotSeries s;
        s.label = "c0 = " + g(c0);
        for (const auto& r : cmp.rows) {
          violations += r.ratio > r.bound + 1e-8;
          worst = std::max(worst, r.ratio);
          if (r.step == 1) {
            s.x.push_back(r.iter);
            s.y.push_back(r.res);
          }
          iters = std::max(iters, r.iter);
        }
        plot.series.push_back(std::move(s));
        text << "  c0 = " << g(c0) << ": beta " << e3(cmp.beta) << ", bound " << f2(cmp.bound) << ", worst ratio "
             << f2(worst) << ", rows above bound " << violations << "/" << cmp.rows.size() << ", max iterations "
             << iters << ", |p_fs - p_mono| " << e3(cmp.final_pressure_gap) << '\n';
      }
      if (c.plots) w.text(c.output / "history.svg", plot.svg());
      break;
    }
  }
  for (const auto& x : sum.warnings) text << "  warning: " << x << '\n';
  text << "  " << sum.files.size() << " files written\n";
  sum.text = text.str();
  return sum;
}

}  // namespace sdg
