#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <json.hpp>
#include <ostream>

#include "sensing/cohort.hpp"

namespace sensing {

namespace {

std::string fixed(double v, int decimals) {
  // Keeps "-0.000" out of the report.
  const auto s = fmt::format("{:.{}f}", v, decimals);
  if (s.find_first_not_of("-0.") == std::string::npos) return s[0] == '-' ? s.substr(1) : s;
  return s;
}

std::string pval(double p) { return fixed(p, 7); }

void summary_row(std::ostream& out, FitnessGroup g, const char* variable,
                 const std::optional<stats::Summary>& s) {
  if (!s) {
    out << fmt::format("{:<9} {:<10} {:>3}  NA\n", to_string(g), variable, 0);
    return;
  }
  out << fmt::format("{:<9} {:<10} {:>3} {:>10} {:>10} {:>10} {:>10} {:>10}\n", to_string(g),
                     variable, s->n, fixed(s->min, 2), fixed(s->max, 2), fixed(s->mean, 3),
                     fixed(s->sd, 3), fixed(s->median, 2));
}

void tukey_block(std::ostream& out, const stats::TukeyResult& t) {
  out << fmt::format("conf_level = {}\nmse = {}\ndf = {}\nq_crit = {}\n", format_number(t.conf),
                     fixed(t.mse, 6), fixed(t.df, 0), fixed(t.q_crit, 6));
  out << fmt::format("{:<20} {:>10} {:>10} {:>10} {:>10}  {}\n", "pair", "diff", "lwr", "upr",
                     "p_adj", "sig");
  for (const auto& r : t.rows) {
    out << fmt::format("{:<20} {:>10} {:>10} {:>10} {:>10}  {}\n", r.group_a + "-" + r.group_b,
                       fixed(r.diff, 3), fixed(r.lwr, 3), fixed(r.upr, 3), pval(r.p_adj),
                       r.p_adj < 1 - t.conf ? "*" : "");
  }
}

void welch_block(std::ostream& out, const stats::WelchResult& w) {
  out << fmt::format("F = {}\ndf1 = {}\ndf2 = {}\np = {}\n", fixed(w.F, 4), fixed(w.df1, 0),
                     fixed(w.df2, 4), pval(w.p));
}

}  // namespace

void write_report(std::ostream& out, const StatReport& rep) {
  const auto& c = rep.config;
  out << "# sensing time cohort report\n\n[config]\n";
  out << "max_st_ms = " << format_number(c.max_st_ms) << '\n'
      << "iqr_k = " << format_number(c.iqr_k) << '\n'
      << "filter_order = " << to_string(c.filter_order) << '\n'
      << "conf_level = " << format_number(c.conf_level) << '\n'
      << "glm_alpha = " << format_number(c.glm_alpha) << '\n';

  out << "\n[counts]\n";
  std::map<Exclusion, std::size_t> by_code;
  std::size_t valid[kGroupCount] = {};
  std::size_t excluded = 0;
  for (const auto& r : rep.rows) {
    if (r.status == Status::Excluded) {
      ++by_code[r.exclusion];
      ++excluded;
    }
    if (r.status == Status::Valid) ++valid[static_cast<int>(r.group)];
  }
  out << "rows = " << rep.rows.size() << '\n'
      << "excluded = " << excluded << '\n';
  for (const auto& [code, n] : by_code) out << "excluded." << to_string(code) << " = " << n << '\n';
  out << "miss = " << rep.misses.size() << '\n' << "outlier = " << rep.outliers.size() << '\n';
  for (int g = 0; g < kGroupCount; ++g) {
    out << "valid." << to_string(static_cast<FitnessGroup>(g)) << " = " << valid[g] << '\n';
  }

  out << "\n[filters]\n";
  for (const auto& m : rep.misses) {
    out << fmt::format("miss     {:<16} {:<9} st_ms = {} (>= {})\n", m.trial_id, to_string(m.group),
                       format_number(m.st_ms), format_number(m.threshold));
  }
  for (const auto& o : rep.outliers) {
    out << fmt::format("outlier  {:<16} {:<9} st_ms = {} (> {})\n", o.trial_id, to_string(o.group),
                       format_number(o.st_ms), fixed(o.threshold, 3));
  }

  out << "\n[summaries]\n";
  out << fmt::format("{:<9} {:<10} {:>3} {:>10} {:>10} {:>10} {:>10} {:>10}\n", "group",
                     "variable", "n", "min", "max", "mean", "sd", "median");
  for (const auto& s : rep.summaries) {
    summary_row(out, s.group, "st_ms", s.st);
    summary_row(out, s.group, "speed_kmh", s.speed_kmh);
    summary_row(out, s.group, "igd_px", s.igd_px);
    summary_row(out, s.group, "ttc_s", s.ttc_s);
  }

  out << "\n[box]\n";
  out << fmt::format("{:<9} {:>3} {:>10} {:>10} {:>10} {:>10} {:>10}  {}\n", "group", "n",
                     "whisk_lo", "q1", "median", "q3", "whisk_hi", "outliers");
  for (const auto& b : rep.boxes) {
    std::string outl;
    for (double v : b.box.outliers) outl += (outl.empty() ? "" : " ") + format_number(v);
    out << fmt::format("{:<9} {:>3} {:>10} {:>10} {:>10} {:>10} {:>10}  {}\n", to_string(b.group),
                       b.n, fixed(b.box.min, 2), fixed(b.box.q1, 2), fixed(b.box.median, 2),
                       fixed(b.box.q3, 2), fixed(b.box.max, 2), outl.empty() ? "-" : outl);
  }

  out << "\n[welch]\n";
  welch_block(out, rep.welch);

  out << "\n[tukey]\n";
  tukey_block(out, rep.tukey);

  out << "\n[glm]\n";
  out << "model = st_ms ~ fitness + speed + IGD + TTC + fitness:IGD:TTC\n"
      << "ss_type = sequential\n"
      << "rows = " << rep.glm_rows << '\n';
  if (rep.glm) {
    const auto& g = *rep.glm;
    out << "residual_df = " << g.residual_df << '\n' << "rss = " << fixed(g.rss, 6) << '\n';
    out << fmt::format("{:<18} {:>3} {:>16} {:>10} {:>10}  {}\n", "term", "df", "ss", "F", "p",
                       "sig");
    for (const auto& t : g.terms) {
      out << fmt::format("{:<18} {:>3} {:>16} {:>10} {:>10}  {}\n", t.name, t.df, fixed(t.ss, 4),
                         fixed(t.F, 4), pval(t.p), t.significant ? "*" : "");
    }
    out << "coefficients:\n";
    for (std::size_t i = 0; i < g.coefficients.size(); ++i) {
      out << fmt::format("  {:<26} {}\n", g.column_names[i], fmt::format("{:.9g}", g.coefficients[i]));
    }
  } else {
    out << "status = not estimated\n";
  }

  out << "\n[shapiro_wilk]\n";
  if (rep.shapiro) {
    out << "target = glm residuals\n"
        << "n = " << rep.shapiro->n << '\n'
        << "W = " << fixed(rep.shapiro->W, 6) << '\n'
        << "p = " << pval(rep.shapiro->p) << '\n';
  } else {
    out << "status = not computed\n";
  }

  out << "\n[pearson]\n";
  out << fmt::format("{:<10} {:>3} {:>9} {:>9} {:>10}\n", "covariate", "n", "r", "t", "p");
  for (const auto& cor : rep.correlations) {
    if (cor.result) {
      const auto& r = *cor.result;
      out << fmt::format("{:<10} {:>3} {:>9} {:>9} {:>10}\n", cor.covariate, r.n, fixed(r.r, 4),
                         fixed(r.t, 4), pval(r.p));
    } else {
      out << fmt::format("{:<10} NA ({})\n", cor.covariate, cor.note);
    }
  }

  out << "\n[sensitivity]\n";
  if (rep.welch_all && rep.tukey_all) {
    out << "rows = valid + miss + outlier\n";
    welch_block(out, *rep.welch_all);
    tukey_block(out, *rep.tukey_all);
  } else {
    out << "status = nothing filtered\n";
  }

  out << "\n[uncertainty]\n";
  out << "resolution_ms = " << format_number(rep.uncertainty.resolution_ms) << '\n'
      << "u_b_ms = " << fixed(rep.uncertainty.u_b_ms, 4) << '\n'
      << "u_combined_ms = " << fixed(rep.uncertainty.u_combined_ms, 4) << '\n';

  out << "\n[audit]\n";
  for (const auto& r : rep.rows) {
    if (r.status == Status::Excluded) {
      out << fmt::format("exclusion  {:<16} {}\n", r.trial_id, to_string(r.exclusion));
    }
  }
  for (const auto& a : rep.audit) {
    out << fmt::format("override   {:<16} {} {} -> {} ({})\n", a.trial_id, a.field,
                       a.old_value.empty() ? "NA" : a.old_value,
                       a.new_value.empty() ? "NA" : a.new_value, a.reason);
  }

  if (!rep.notes.empty()) {
    out << "\n[notes]\n";
    for (const auto& n : rep.notes) out << n << '\n';
  }
}

void write_box_json(std::ostream& out, std::span<const GroupBox> boxes, double k) {
  nlohmann::ordered_json doc;
  doc["variable"] = "st_ms";
  doc["iqr_k"] = k;
  doc["groups"] = nlohmann::ordered_json::array();
  for (const auto& b : boxes) {
    nlohmann::ordered_json g;
    g["group"] = to_string(b.group);
    g["n"] = b.n;
    g["whisker_low"] = b.box.min;
    g["q1"] = b.box.q1;
    g["median"] = b.box.median;
    g["q3"] = b.box.q3;
    g["whisker_high"] = b.box.max;
    g["iqr"] = b.box.iqr;
    g["outliers"] = b.box.outliers;
    doc["groups"].push_back(std::move(g));
  }
  out << doc.dump(2) << '\n';
}

void write_box_svg(std::ostream& out, std::span<const GroupBox> boxes) {
  constexpr double kTop = 40, kBottom = 360, kLeft = 70, kSlot = 120, kBoxHalf = 30;
  double lo = boxes.front().box.min, hi = boxes.front().box.max;
  for (const auto& b : boxes) {
    lo = std::min(lo, b.box.min);
    hi = std::max(hi, b.box.max);
    for (double v : b.box.outliers) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi <= lo) {
    lo -= 1;
    hi += 1;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const auto y = [&](double v) { return kBottom - (v - lo) / (hi - lo) * (kBottom - kTop); };
  const auto num = [](double v) { return fixed(v, 2); };

  const double width = kLeft + kSlot * static_cast<double>(boxes.size()) + 20;
  const double height = kBottom + 50;
  out << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} "
      "{1}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      num(width), num(height));
  out << fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", num(width),
                     num(height));
  out << fmt::format("<text x=\"{}\" y=\"20\" text-anchor=\"middle\">Sensing time by group</text>\n",
                     num(width / 2));

  // y axis with ticks on a 1-2-5 step
  const double raw = (hi - lo) / 5;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double step = raw / mag < 2 ? 2 * mag : raw / mag < 5 ? 5 * mag : 10 * mag;
  out << fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n",
                     num(kLeft), num(kTop), num(kBottom));
  for (double t = std::ceil(lo / step) * step; t <= hi; t += step) {
    out << fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>"
        "<text x=\"{3}\" y=\"{4}\" text-anchor=\"end\">{5}</text>\n",
        num(kLeft - 5), num(y(t)), num(kLeft), num(kLeft - 8), num(y(t) + 4), fixed(t, 0));
  }
  out << fmt::format(
      "<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">ST "
      "[ms]</text>\n",
      num((kTop + kBottom) / 2));

  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i].box;
    const double cx = kLeft + kSlot * (static_cast<double>(i) + 0.5);
    out << fmt::format("<g id=\"box-{}\">\n", to_string(boxes[i].group));
    // whiskers and caps
    for (const auto& [from, to] : {std::pair{b.q3, b.max}, std::pair{b.q1, b.min}}) {
      out << fmt::format(
          "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>"
          "<line x1=\"{3}\" y1=\"{2}\" x2=\"{4}\" y2=\"{2}\" stroke=\"black\"/>\n",
          num(cx), num(y(from)), num(y(to)), num(cx - kBoxHalf / 2), num(cx + kBoxHalf / 2));
    }
    out << fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#cfe0f3\" stroke=\"black\"/>\n",
        num(cx - kBoxHalf), num(y(b.q3)), num(2 * kBoxHalf), num(y(b.q1) - y(b.q3)));
    out << fmt::format(
        "<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"black\" stroke-width=\"2\"/>\n",
        num(cx - kBoxHalf), num(cx + kBoxHalf), num(y(b.median)));
    for (double v : b.outliers) {
      out << fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"none\" stroke=\"black\"/>\n",
                         num(cx), num(y(v)));
    }
    out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{} (n={})</text>\n", num(cx),
                       num(kBottom + 20), to_string(boxes[i].group), boxes[i].n);
    out << "</g>\n";
  }
  out << "</svg>\n";
}

}  // namespace sensing
