#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lgc/core.hpp"
#include "lgc/util.hpp"

namespace lgc {

struct MetricsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyInput : MetricsError {
    EmptyInput() : MetricsError("empty token cost list") {}
};
struct NonPositiveCost : MetricsError {
    explicit NonPositiveCost(double w)
        : MetricsError("token cost must be > 0, got " + format_double(w)) {}
};
struct IoError : MetricsError {
    using MetricsError::MetricsError;
};

// w_i / min(W); minimum maps to exactly 1.0, input order preserved.
inline std::vector<double> normalize_token_costs(const std::vector<double>& w) {
    if (w.empty()) throw EmptyInput();
    for (double x : w)
        if (!(x > 0.0)) throw NonPositiveCost(x);
    double m = *std::min_element(w.begin(), w.end());
    std::vector<double> out;
    out.reserve(w.size());
    for (double x : w) out.push_back(x / m);
    return out;
}

struct EpisodeRow {
    long episode = 0;
    std::string task_id;
    double ret = 0.0;
    int steps = 0;
    bool success = false;
    std::string failure;  // none | collision | timeout | planning
    long tokens_planner = 0;
    long tokens_critic = 0;
    long tokens_graph = 0;
    long tokens_reward = 0;
    double critic_loss = 0.0;
};

struct EvalRow {
    long episode = 0;  // training episode at which the eval ran
    double sr = 0.0;
    double at_steps = 0.0;    // NaN sentinel when sr == 0
    double at_seconds = 0.0;  // at_steps * 0.25
};

struct RunLog {
    std::vector<EpisodeRow> episodes;
    std::vector<EvalRow> evals;
};

namespace csv_detail {
inline std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}
}  // namespace csv_detail

inline const char* kCsvHeader =
    "episode,task_id,return,steps,success,failure,tokens_planner,tokens_critic,tokens_graph,"
    "tokens_reward,critic_loss";

inline std::string csv_text(const RunLog& log) {
    std::ostringstream os;
    os << kCsvHeader << "\n";
    for (const auto& r : log.episodes) {
        os << r.episode << "," << csv_detail::quote(r.task_id) << "," << format_double(r.ret)
           << "," << r.steps << "," << (r.success ? 1 : 0) << "," << r.failure << ","
           << r.tokens_planner << "," << r.tokens_critic << "," << r.tokens_graph << ","
           << r.tokens_reward << "," << format_double(r.critic_loss) << "\n";
    }
    return os.str();
}

inline void emit_csv(const RunLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << csv_text(log);
    if (!out) throw IoError("write failed for " + path);
}

inline RunLog load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty csv " + path);
    if (line != kCsvHeader) throw IoError("unexpected csv header in " + path);
    RunLog log;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        // fields never contain commas except possibly task_id; handle quotes
        std::vector<std::string> f;
        std::string cur;
        bool q = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            char c = line[i];
            if (q) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') { cur += '"'; ++i; }
                else if (c == '"') q = false;
                else cur += c;
            } else if (c == '"') {
                q = true;
            } else if (c == ',') {
                f.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        f.push_back(cur);
        if (f.size() != 11) throw IoError("bad csv row: " + line);
        EpisodeRow r;
        r.episode = std::stol(f[0]);
        r.task_id = f[1];
        r.ret = std::strtod(f[2].c_str(), nullptr);
        r.steps = std::stoi(f[3]);
        r.success = f[4] == "1";
        r.failure = f[5];
        r.tokens_planner = std::stol(f[6]);
        r.tokens_critic = std::stol(f[7]);
        r.tokens_graph = std::stol(f[8]);
        r.tokens_reward = std::stol(f[9]);
        r.critic_loss = std::strtod(f[10].c_str(), nullptr);
        log.episodes.push_back(r);
    }
    return log;
}

// ---- SVG training curves ---------------------------------------------------

namespace svg_detail {
inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
}
}  // namespace svg_detail

// Deterministic SVG line chart of smoothed per-episode return (moving
// average, window 20) for each labelled log. Byte-identical for
// identical inputs.
inline std::string curves_svg(const std::vector<std::pair<std::string, const RunLog*>>& logs) {
    if (logs.empty()) throw MetricsError("emit_curves needs at least one log");
    const int W = 720, H = 420, ML = 60, MR = 20, MT = 20, MB = 40;
    const int plot_w = W - ML - MR, plot_h = H - MT - MB;

    // smoothed series
    std::vector<std::vector<double>> series;
    std::size_t max_len = 0;
    double lo = 0.0, hi = 1.0;
    bool first = true;
    for (const auto& [label, log] : logs) {
        std::vector<double> s;
        double acc = 0.0;
        std::vector<double> window;
        for (const auto& r : log->episodes) {
            window.push_back(r.ret);
            acc += r.ret;
            if (window.size() > 20) {
                acc -= window[window.size() - 21];
            }
            std::size_t n = std::min<std::size_t>(window.size(), 20);
            s.push_back(acc / static_cast<double>(n));
        }
        for (double v : s) {
            if (first) { lo = hi = v; first = false; }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        max_len = std::max(max_len, s.size());
        series.push_back(std::move(s));
    }
    if (hi <= lo) hi = lo + 1.0;

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    // axes
    os << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << MT + plot_h
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ML << "\" y1=\"" << MT + plot_h << "\" x2=\"" << ML + plot_w
       << "\" y2=\"" << MT + plot_h << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ML + plot_w / 2 << "\" y=\"" << H - 8
       << "\" text-anchor=\"middle\" font-size=\"12\">episode</text>\n";
    os << "<text x=\"14\" y=\"" << MT + plot_h / 2
       << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
       << MT + plot_h / 2 << ")\">return (smoothed)</text>\n";
    os << "<text x=\"" << ML - 6 << "\" y=\"" << MT + 4
       << "\" text-anchor=\"end\" font-size=\"10\">" << svg_detail::num(hi) << "</text>\n";
    os << "<text x=\"" << ML - 6 << "\" y=\"" << MT + plot_h
       << "\" text-anchor=\"end\" font-size=\"10\">" << svg_detail::num(lo) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = palette[k % 6];
        if (!s.empty()) {
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.size(); ++i) {
                double x = ML + (max_len <= 1 ? 0.0
                                              : plot_w * static_cast<double>(i) /
                                                    static_cast<double>(max_len - 1));
                double y = MT + plot_h - plot_h * (s[i] - lo) / (hi - lo);
                os << svg_detail::num(x) << "," << svg_detail::num(y);
                if (i + 1 < s.size()) os << " ";
            }
            os << "\"/>\n";
        }
        int ly = MT + 16 + static_cast<int>(k) * 16;
        os << "<line x1=\"" << ML + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << ML + 30
           << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
        os << "<text x=\"" << ML + 36 << "\" y=\"" << ly << "\" font-size=\"11\">"
           << logs[k].first << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

inline void emit_curves(const std::vector<std::pair<std::string, const RunLog*>>& logs,
                        const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << curves_svg(logs);
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace lgc
