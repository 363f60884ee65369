#include "bsecnn/report.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace bsecnn {
namespace {

std::string fixed4(double v) { return fmt::format("{:.4f}", v); }

std::string join_set(const std::set<std::size_t>& items) {
  std::string out;
  for (auto k : items) out += (out.empty() ? "" : " ") + std::to_string(k);
  return out.empty() ? "none" : out;
}

}  // namespace

std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < cells.size() ? cells[c] : "";
      if (c > 0) out += "  ";
      out += c == 0 ? fmt::format("{:<{}}", cell, width[c]) : fmt::format("{:>{}}", cell, width[c]);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
  for (const auto& row : rows) out += line(row);
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "bagging_ratio,n_models,accuracy\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{}\n", r.bagging_ratio, r.n_models, r.accuracy ? fixed4(*r.accuracy) : "failed");
  }
  return out;
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({fmt::format("{}", r.bagging_ratio), std::to_string(r.n_models),
                     r.accuracy ? fixed4(*r.accuracy) : "failed"});
  }
  return format_table({"bagging_ratio", "n_models", "accuracy"}, cells);
}

std::string combiners_csv(const std::vector<CombinerRow>& rows) {
  std::string out = "method,precision_micro,recall_micro,f1_micro\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{}\n", combiner_name(r.method), fixed4(r.micro.precision), fixed4(r.micro.recall),
                       fixed4(r.micro.f1));
  }
  return out;
}

std::string combiners_table(const std::vector<CombinerRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({combiner_name(r.method), fixed4(r.micro.precision), fixed4(r.micro.recall), fixed4(r.micro.f1)});
  }
  return format_table({"method", "precision_micro", "recall_micro", "f1_micro"}, cells);
}

std::string metrics_csv(const EvalReport& r) {
  std::string out = "metric,value\n";
  auto row = [&](std::string_view name, double v) { out += fmt::format("{},{:.6f}\n", name, v); };
  out += fmt::format("split,{}\n", r.split);
  out += fmt::format("combiner,{}\n", combiner_name(r.combiner));
  out += fmt::format("samples,{}\n", r.confusion.total());
  row("accuracy", r.accuracy);
  row("binary_accuracy", r.binary_accuracy);
  row("precision_micro", r.micro.precision);
  row("recall_micro", r.micro.recall);
  row("f1_micro", r.micro.f1);
  row("precision_macro", r.macro.precision);
  row("recall_macro", r.macro.recall);
  row("f1_macro", r.macro.f1);
  out += fmt::format("excluded_classes,{}\n", join_set(r.excluded));
  out += fmt::format("zero_division,{}\n", (r.micro.zero_division || r.macro.zero_division) ? 1 : 0);
  for (std::size_t m = 0; m < r.member_accuracy.size(); ++m) row(fmt::format("member_{}_accuracy", m), r.member_accuracy[m]);
  return out;
}

std::string report_text(const EvalReport& r) {
  std::string out = fmt::format("split: {}  samples: {}  combiner: {}\n\n", r.split, r.confusion.total(),
                                combiner_name(r.combiner));
  out += format_table({"metric", "value"}, {{"accuracy", fixed4(r.accuracy)},
                                            {"binary_accuracy", fixed4(r.binary_accuracy)},
                                            {"precision_micro", fixed4(r.micro.precision)},
                                            {"recall_micro", fixed4(r.micro.recall)},
                                            {"f1_micro", fixed4(r.micro.f1)},
                                            {"precision_macro", fixed4(r.macro.precision)},
                                            {"recall_macro", fixed4(r.macro.recall)},
                                            {"f1_macro", fixed4(r.macro.f1)}});
  out += fmt::format("micro averages exclude classes: {}\n", join_set(r.excluded));
  if (r.micro.zero_division || r.macro.zero_division) out += "note: some ratios were 0/0 and are reported as 0\n";

  if (!r.member_accuracy.empty()) {
    std::vector<std::vector<std::string>> members;
    for (std::size_t m = 0; m < r.member_accuracy.size(); ++m) {
      members.push_back({std::to_string(m), fixed4(r.member_accuracy[m])});
    }
    out += "\n" + format_table({"sub-model", "accuracy"}, members);
  }

  const std::size_t n = r.confusion.n_classes();
  std::vector<std::string> header{"truth\\pred"};
  for (std::size_t k = 0; k < n; ++k) header.push_back(std::to_string(k));
  std::vector<std::vector<std::string>> rows;
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<std::string> row{std::to_string(t)};
    for (std::size_t p = 0; p < n; ++p) row.push_back(std::to_string(r.confusion.at(t, p)));
    rows.push_back(std::move(row));
  }
  out += "\nconfusion matrix\n" + format_table(header, rows);
  return out;
}

}  // namespace bsecnn
