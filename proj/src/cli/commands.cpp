#include "subdetector/cli/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "subdetector/cli/plot.hpp"
#include "subdetector/encoder/checkpoint.hpp"
#include "subdetector/errors.hpp"
#include "subdetector/evalmetrics/metrics.hpp"
#include "subdetector/proximity/proximity.hpp"

namespace subdetector::cli {
namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

template <class F>
void write_file(const fs::path& path, F&& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw DataError("write failed for " + path.string());
}

void prepare_output(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output, ec);
  if (ec) throw DataError("cannot create output directory " + config.output.string() + ": " + ec.message());
}

void require_inputs(const RunConfig& config) {
  if (config.inputs.empty()) throw ConfigError("command '" + config.command + "' needs at least one --input");
}

SeriesFormat format_for(const RunConfig& config, const fs::path& path) {
  if (config.format) return *config.format;
  return path.extension() == ".csv" ? SeriesFormat::LabeledCsv : SeriesFormat::PlainValues;
}

TimeSeries load_series(const RunConfig& config, const fs::path& path) {
  TimeSeries s = ingest(path, format_for(config, path));
  s.name = path.stem().string();
  if (config.period) {
    s.period = *config.period;
  } else if (!s.period) {
    const std::size_t max_lag = std::max<std::size_t>(4, std::min<std::size_t>(s.size() / 4, 1000));
    s.period = estimate_period(s, max_lag);
  }
  return s;
}

WindowConfig window_for(const RunConfig& config, std::optional<std::size_t> period) {
  WindowConfig w = WindowConfig::for_period(period, config.max_scale);
  if (config.delta) {
    w.delta = *config.delta;
    w.stride = 2 * w.delta;
  }
  if (config.stride) w.stride = *config.stride;
  return w;
}

bool both_classes(const TimeSeries& s) {
  if (!s.labels) return false;
  bool pos = false, neg = false;
  for (std::uint8_t l : *s.labels) (l ? pos : neg) = true;
  return pos && neg;
}

std::span<const std::uint8_t> labels_of(const TimeSeries& s) {
  return s.labels ? std::span<const std::uint8_t>(*s.labels) : std::span<const std::uint8_t>();
}

void write_window_csv(std::ostream& out, const SubsequenceSet& set, std::span<const double> scores) {
  out << "index,start,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i) out << i << ',' << set.starts()[i] << ',' << fmt(scores[i]) << '\n';
}

std::string summary(const MetricReport& r) {
  std::string s = "auc=" + short_fmt(r.auc);
  for (const auto& [k, v] : r.recall_at_k) s += " recall@" + std::to_string(k) + "=" + short_fmt(v);
  return s + " best_f1=" + short_fmt(r.best_f1);
}

struct SeriesResult {
  std::vector<double> window_scores;
  std::vector<double> point_scores;
  std::optional<MetricReport> metrics;
};

// Trains (or loads) and scores one series; shared by detect and bench.
SeriesResult run_detector(const RunConfig& config, const TimeSeries& series, Detection& d) {
  DetectorConfig dc = config.detector;
  dc.window = window_for(config, series.period);
  SeriesResult r;
  if (config.checkpoint) {
    d = prepare(series, dc);
    load_checkpoint(*config.checkpoint, d.model->all_params());
    r.window_scores = score(*d.model, *d.data);
  } else {
    d = detect(series, dc);
    r.window_scores = d.report.scores;
  }
  r.point_scores = aggregate_points(r.window_scores, d.data->set(), series.size());
  if (both_classes(series)) r.metrics = evaluate(r.window_scores, d.data->set(), *series.labels);
  return r;
}

// Parses "index,point_score,label" as written by detect.
TimeSeries read_score_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  TimeSeries s;
  s.name = path.stem().string();
  std::vector<std::uint8_t> labels;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line.rfind("index", 0) == 0)) continue;
    std::stringstream fields(line);
    std::string idx, score, label;
    std::getline(fields, idx, ',');
    std::getline(fields, score, ',');
    std::getline(fields, label, ',');
    try {
      std::size_t used = 0;
      s.values.push_back(std::stod(score, &used));
      if (used != score.size()) throw std::invalid_argument(score);
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad score '" + score + "'");
    }
    if (label != "0" && label != "1") {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": label must be 0 or 1");
    }
    labels.push_back(label == "1" ? 1 : 0);
  }
  if (s.values.empty()) throw DataError(path.string() + ": no scores");
  s.labels = std::move(labels);
  return s;
}

}  // namespace

void cmd_detect(const RunConfig& config, std::ostream& log) {
  require_inputs(config);
  if (config.inputs.size() > 1 && (config.checkpoint || config.save_checkpoint)) {
    throw ConfigError("checkpoints work with a single --input");
  }
  prepare_output(config);
  std::vector<MetricReport> reports;
  for (const fs::path& path : config.inputs) {
    const TimeSeries series = load_series(config, path);
    Detection d;
    const SeriesResult r = run_detector(config, series, d);
    const fs::path base = config.output / series.name;
    write_file(base.string() + ".scores.csv",
               [&](std::ostream& o) { write_score_csv(o, r.point_scores, labels_of(series)); });
    write_file(base.string() + ".windows.csv", [&](std::ostream& o) { write_window_csv(o, d.data->set(), r.window_scores); });
    if (!config.checkpoint) {
      write_file(base.string() + ".train.csv", [&](std::ostream& o) { write_metrics_log(o, d.report.epochs); });
    }
    if (config.save_checkpoint) save_checkpoint(*config.save_checkpoint, d.model->all_params());
    if (config.plot) {
      write_file(base.string() + ".svg", [&](std::ostream& o) {
        write_score_plot(o, series, r.point_scores, r.window_scores, d.data->set(), config.top_k);
      });
    }
    log << series.name << ": " << d.data->set().count() << " windows of length " << d.data->set().length();
    if (r.metrics) {
      write_file(base.string() + ".report.txt", [&](std::ostream& o) { write_report(o, *r.metrics); });
      reports.push_back(*r.metrics);
      log << ", " << summary(*r.metrics);
    }
    log << '\n';
  }
  if (reports.size() > 1) {
    const MetricReport avg = average_reports(reports);
    write_file(config.output / "summary.report.txt", [&](std::ostream& o) { write_report(o, avg); });
    log << "average over " << reports.size() << " series: " << summary(avg) << '\n';
  }
}

void cmd_discord(const RunConfig& config, std::ostream& log) {
  require_inputs(config);
  prepare_output(config);
  for (const fs::path& path : config.inputs) {
    const TimeSeries series = load_series(config, path);
    const SubsequenceSet set = make_windows(series, window_for(config, series.period));
    const DiscordReport rep = discord_scores(set, config.discord_k);
    const fs::path base = config.output / series.name;
    write_file(base.string() + ".discord.csv", [&](std::ostream& o) { write_window_csv(o, set, rep.scores); });
    std::size_t top = 0;
    for (std::size_t i = 1; i < rep.scores.size(); ++i)
      if (rep.scores[i] > rep.scores[top]) top = i;
    log << series.name << ": top discord at window " << top << " (start " << set.starts()[top] << ")";
    if (both_classes(series)) {
      const MetricReport m = evaluate(rep.scores, set, *series.labels);
      write_file(base.string() + ".discord.report.txt", [&](std::ostream& o) { write_report(o, m); });
      log << ", " << summary(m);
    }
    log << '\n';
  }
}

void cmd_theorem(const RunConfig& config, std::ostream& log) {
  prepare_output(config);
  const theory::TheoremOutcome out = theory::compare_theorems(config.theorem);
  write_file(config.output / "theorem.report.txt", [&](std::ostream& o) { theory::write_outcome(o, config.theorem, out); });
  write_file(config.output / "theorem.trials.csv", [&](std::ostream& o) { theory::write_trials_csv(o, out); });
  log << "delta=" << short_fmt(out.delta) << " theorem1_rate=" << short_fmt(out.theorem1_rate)
      << " theorem2_rate=" << short_fmt(out.theorem2_rate)
      << " variance_reduction_rate=" << short_fmt(out.variance_reduction_rate) << '\n';
}

void cmd_bench(const RunConfig& config, std::ostream& log) {
  if (config.bench_lengths.empty()) throw ConfigError("bench needs at least one length");
  prepare_output(config);
  std::vector<double> xs, ys;
  std::ostringstream table;
  table << "length,windows,seconds\n";
  for (std::size_t length : config.bench_lengths) {
    SyntheticConfig sc = config.synthetic;
    sc.length = length;
    const TimeSeries series = make_synthetic(sc);
    const auto t0 = std::chrono::steady_clock::now();
    Detection d;
    run_detector(config, series, d);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    xs.push_back(static_cast<double>(length));
    ys.push_back(secs);
    table << length << ',' << d.data->set().count() << ',' << fmt(secs) << '\n';
    log << "length " << length << ": " << d.data->set().count() << " windows, " << short_fmt(secs) << " s\n";
  }
  const std::optional<double> r2 = linear_fit_r2(xs, ys);
  write_file(config.output / "bench.csv", [&](std::ostream& o) { o << table.str(); });
  write_file(config.output / "bench.report.txt",
             [&](std::ostream& o) { o << "r2=" << (r2 ? fmt(*r2) : std::string("n/a")) << '\n'; });
  log << "linear fit r2=" << (r2 ? short_fmt(*r2) : std::string("n/a")) << '\n';
}

void cmd_eval(const RunConfig& config, std::ostream& log) {
  require_inputs(config);
  prepare_output(config);
  std::vector<MetricReport> reports;
  for (const fs::path& path : config.inputs) {
    const TimeSeries s = read_score_csv(path);
    if (!both_classes(s)) throw MetricError(path.string() + ": labels must contain both classes");
    // Recall@k needs windows: window score = max point score it covers.
    const SubsequenceSet set = make_windows(s, window_for(config, config.period));
    std::vector<double> window_scores(set.count());
    for (std::size_t i = 0; i < set.count(); ++i) {
      const std::span<const double> w = set.window(i);
      window_scores[i] = *std::max_element(w.begin(), w.end());
    }
    MetricReport m;
    m.auc = auc(s.values, *s.labels);
    const auto segments = anomaly_segments(*s.labels);
    for (std::size_t k : {1, 3}) m.recall_at_k[k] = recall_at_k(window_scores, set, segments, k);
    const F1Result f1 = best_f1(s.values, *s.labels);
    m.best_f1 = f1.f1;
    m.threshold_at_best_f1 = f1.threshold;
    write_file(config.output / (s.name + ".eval.txt"), [&](std::ostream& o) { write_report(o, m); });
    log << s.name << ": " << summary(m) << '\n';
    reports.push_back(m);
  }
  if (reports.size() > 1) {
    const MetricReport avg = average_reports(reports);
    write_file(config.output / "summary.eval.txt", [&](std::ostream& o) { write_report(o, avg); });
    log << "average over " << reports.size() << " series: " << summary(avg) << '\n';
  }
}

void cmd_synth(const RunConfig& config, std::ostream& log) {
  prepare_output(config);
  const TimeSeries s = make_synthetic(config.synthetic);
  const fs::path path = config.output / "synthetic.csv";
  write_file(path, [&](std::ostream& o) {
    o << "value,label\n";
    for (std::size_t t = 0; t < s.size(); ++t) o << fmt(s.values[t]) << ',' << int((*s.labels)[t]) << '\n';
  });
  log << "wrote " << path.string() << " (" << s.size() << " points)\n";
}

int run_command(const RunConfig& config, std::ostream& log, std::ostream& err) {
  try {
    if (config.command == "detect") cmd_detect(config, log);
    else if (config.command == "discord") cmd_discord(config, log);
    else if (config.command == "theorem") cmd_theorem(config, log);
    else if (config.command == "bench") cmd_bench(config, log);
    else if (config.command == "eval") cmd_eval(config, log);
    else if (config.command == "synth") cmd_synth(config, log);
    else throw ConfigError("unknown command '" + config.command + "'");
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const TrainingError& e) {
    err << "training error: " << e.what() << '\n';
    return kExitTraining;
  }
}

std::optional<double> linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) return std::nullopt;
  if (syy == 0) return 1.0;
  return sxy * sxy / (sxx * syy);
}

}  // namespace subdetector::cli
