#include "driveagent/policy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "driveagent/kernels.hpp"

namespace driveagent {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

int sample_from_logits(std::span<const double> logits, double temperature, Rng& rng) {
  std::vector<double> scaled(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) scaled[i] = logits[i] / temperature;
  double lse = kernels::log_sum_exp(scaled);
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    acc += std::exp(scaled[i] - lse);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(scaled.size()) - 1;
}

const SceneObject* leading_object_of(const Scene& scene) {
  tools::ToolResult r = tools::get_leading_object_detection(scene);
  if (!r.is_value()) return nullptr;
  return scene.find_object(r.value["id"].get<std::string>());
}

/// Widest contiguous run of sub-threshold occupancy cells containing the ego
/// column at t=0, minimized over the rows covering y in [0, 12), as a
/// fraction of the lateral extent.
double corridor_fraction(const Scene& scene) {
  const auto& occ = scene.occupancy;
  if (occ.values.empty() || occ.nx() == 0) return 1.0;
  int ego_ix = occ.cell_of(Position{0.0, 0.0}).first;
  double width = occ.x_hi - occ.x_lo;
  double best = 1.0;
  bool any_row = false;
  for (int iy = 0; iy < occ.ny(); ++iy) {
    double row_y = occ.y_lo + (iy + 0.5) * occ.resolution;
    if (row_y < 0.0 || row_y >= 12.0) continue;
    any_row = true;
    auto free_cell = [&](int ix) { return occ.values[occ.index(ix, iy, 0)] < 0.5; };
    if (!free_cell(ego_ix)) return 0.0;
    int lo = ego_ix;
    while (lo > 0 && free_cell(lo - 1)) --lo;
    int hi = ego_ix;
    while (hi + 1 < occ.nx() && free_cell(hi + 1)) ++hi;
    double run = (hi - lo + 1) * occ.resolution / width;
    best = std::min(best, run);
  }
  return any_row ? best : 1.0;
}

}  // namespace

TemplateSpace::TemplateSpace(const Catalog& catalog)
    : num_invocations_(static_cast<int>(catalog.invocations().size())),
      num_subqs_(static_cast<int>(catalog.entries().size())),
      count_(num_subqs_ * (num_invocations_ + 2)) {}

StepTemplate TemplateSpace::at(int k) const {
  StepTemplate t;
  int variants = num_invocations_ + 2;
  t.sub_question = k / variants;
  int j = k % variants;  // 0: no-tool continue, 1: no-tool conclude, 2+: tool continue
  t.conclude = j == 1;
  t.invocation = j >= 2 ? j - 2 : -1;
  return t;
}

int TemplateSpace::index_of(const StepTemplate& t) const {
  if (t.invocation < -1 || t.invocation >= num_invocations_) return -1;
  if (t.sub_question < 0 || t.sub_question >= num_subqs_) return -1;
  if (t.uses_tool() && t.conclude) return -1;  // concluding means answering now
  int j = t.uses_tool() ? t.invocation + 2 : (t.conclude ? 1 : 0);
  return t.sub_question * (num_invocations_ + 2) + j;
}

std::size_t feature_count(const Catalog& catalog) { return 8 + catalog.entries().size(); }

std::vector<double> featurize(const Scene& scene, const QAItem& qa, const Trace& prefix,
                              const Catalog& catalog) {
  std::size_t S = catalog.entries().size();
  std::vector<double> f(8 + S, 0.0);
  f[0] = 1.0;
  f[1] = static_cast<double>(scene.objects.size()) / 10.0;
  const SceneObject* lead = leading_object_of(scene);
  f[2] = lead ? lead->position.y / 40.0 : -1.0;
  f[3] = corridor_fraction(scene);
  tools::ToolResult crossing = tools::get_nearest_pedestrian_crossing(scene);
  if (crossing.is_value()) {
    f[4] = std::hypot(crossing.value["x"].get<double>(), crossing.value["y"].get<double>()) / 40.0;
  } else {
    f[4] = -1.0;
  }
  f[5 + catalog.match_question(qa.question)] = 1.0;
  f[5 + S] = static_cast<double>(prefix.steps.size()) / kStepFeatureScale;
  bool any_obs = false;
  for (const auto& step : prefix.steps) any_obs |= step.observation.has_value();
  f[6 + S] = any_obs ? 1.0 : 0.0;
  f[7 + S] = (!prefix.steps.empty() && prefix.steps.back().observation) ? 1.0 : 0.0;
  return f;
}

PolicyContext make_context(const Scene& scene, const QAItem& qa, const Trace& prefix,
                           const Catalog& catalog) {
  PolicyContext ctx;
  ctx.scene = &scene;
  ctx.qa = &qa;
  ctx.prefix = &prefix;
  ctx.features = featurize(scene, qa, prefix, catalog);
  return ctx;
}

// ---- LinearPolicy ----

LinearPolicy::LinearPolicy(const Catalog* catalog)
    : catalog_(catalog),
      space_(*catalog),
      feature_dim_(feature_count(*catalog)),
      answer_dim_(kMaxAnswerChoices + 1),
      params_(static_cast<std::size_t>(space_.count()) * feature_dim_ + answer_dim_, 0.0) {}

std::vector<double> LinearPolicy::template_logits(const PolicyContext& ctx) const {
  std::vector<double> logits(space_.count());
  kernels::matvec(std::span<const double>(params_.data(), space_.count() * feature_dim_),
                  space_.count(), feature_dim_, ctx.features, logits);
  return logits;
}

double LinearPolicy::log_prob(const PolicyContext& ctx, const StepTemplate& t) const {
  int k = space_.index_of(t);
  if (k < 0) throw Error("log_prob: template outside the catalog space");
  std::vector<double> logits = template_logits(ctx);
  return logits[k] - kernels::log_sum_exp(logits);
}

void LinearPolicy::grad_log_prob(const PolicyContext& ctx, const StepTemplate& t, double coeff,
                                 std::span<double> grad) const {
  int k = space_.index_of(t);
  if (k < 0) throw Error("grad_log_prob: template outside the catalog space");
  std::vector<double> logits = template_logits(ctx);
  double lse = kernels::log_sum_exp(logits);
  for (int j = 0; j < space_.count(); ++j) {
    double p = std::exp(logits[j] - lse);
    double c = coeff * ((j == k ? 1.0 : 0.0) - p);
    kernels::axpy(c, ctx.features, grad.subspan(j * feature_dim_, feature_dim_));
  }
}

StepTemplate LinearPolicy::sample(const PolicyContext& ctx, double temperature, Rng& rng) const {
  std::vector<double> logits = template_logits(ctx);
  return space_.at(sample_from_logits(logits, temperature, rng));
}

std::vector<double> LinearPolicy::template_probs(const PolicyContext& ctx) const {
  std::vector<double> logits = template_logits(ctx);
  double lse = kernels::log_sum_exp(logits);
  for (double& v : logits) v = std::exp(v - lse);
  return logits;
}

std::vector<double> LinearPolicy::answer_features(const AnswerSlot& slot, int choice) {
  std::vector<double> psi(kMaxAnswerChoices + 1, 0.0);
  if (choice >= 0 && choice < kMaxAnswerChoices) psi[choice] = 1.0;
  if (slot.observation && choice >= 0 && choice < static_cast<int>(slot.choices.size())) {
    std::set<std::string> value_tokens;
    for (const auto& t : tools::result_value_tokens(*slot.observation)) {
      value_tokens.insert(lower(t));
    }
    auto choice_tokens = tokenize(lower(slot.choices[choice].text));
    if (!choice_tokens.empty()) {
      std::size_t hit = 0;
      for (const auto& t : choice_tokens) hit += value_tokens.count(t.text);
      psi[kMaxAnswerChoices] = static_cast<double>(hit) / choice_tokens.size();
    }
  }
  return psi;
}

std::vector<double> LinearPolicy::answer_logits(const AnswerSlot& slot) const {
  if (slot.choices.empty()) throw Error("answer slot: empty choice list");
  if (slot.choices.size() > kMaxAnswerChoices) {
    throw Error("answer slot: more than " + std::to_string(kMaxAnswerChoices) + " choices");
  }
  std::span<const double> w(params_.data() + params_.size() - answer_dim_, answer_dim_);
  std::vector<double> logits(slot.choices.size());
  for (std::size_t c = 0; c < slot.choices.size(); ++c) {
    logits[c] = kernels::dot(w, answer_features(slot, static_cast<int>(c)));
  }
  return logits;
}

double LinearPolicy::answer_log_prob(const AnswerSlot& slot, int choice) const {
  if (choice < 0 || choice >= static_cast<int>(slot.choices.size())) {
    throw Error("answer_log_prob: choice out of range");
  }
  std::vector<double> logits = answer_logits(slot);
  return logits[choice] - kernels::log_sum_exp(logits);
}

void LinearPolicy::grad_answer_log_prob(const AnswerSlot& slot, int choice, double coeff,
                                        std::span<double> grad) const {
  std::vector<double> logits = answer_logits(slot);
  double lse = kernels::log_sum_exp(logits);
  std::span<double> gw = grad.subspan(grad.size() - answer_dim_, answer_dim_);
  for (std::size_t c = 0; c < slot.choices.size(); ++c) {
    double p = std::exp(logits[c] - lse);
    double ccoeff = coeff * ((static_cast<int>(c) == choice ? 1.0 : 0.0) - p);
    kernels::axpy(ccoeff, answer_features(slot, static_cast<int>(c)), gw);
  }
}

int LinearPolicy::sample_answer(const AnswerSlot& slot, double temperature, Rng& rng) const {
  std::vector<double> logits = answer_logits(slot);
  return sample_from_logits(logits, temperature, rng);
}

void LinearPolicy::set_answer_overlap_weight(double w) {
  params_[params_.size() - 1] = w;
}

uint64_t LinearPolicy::params_hash() const {
  std::string blob;
  blob.reserve(params_.size() * sizeof(double));
  for (double v : params_) {
    blob.append(reinterpret_cast<const char*>(&v), sizeof(double));
  }
  return fnv1a(blob);
}

void LinearPolicy::save(const std::string& path) const {
  Json doc;
  doc["format_version"] = 1;
  doc["policy"] = "linear";
  doc["templates"] = space_.count();
  doc["feature_dim"] = feature_dim_;
  doc["answer_dim"] = answer_dim_;
  Json names = Json::array();
  for (const auto& e : catalog_->entries()) names.push_back(e.id);
  doc["catalog_entries"] = std::move(names);
  doc["template_weights"] =
      std::vector<double>(params_.begin(), params_.end() - static_cast<long>(answer_dim_));
  doc["answer_weights"] =
      std::vector<double>(params_.end() - static_cast<long>(answer_dim_), params_.end());
  write_file(path, doc.dump(2) + "\n");
}

LinearPolicy LinearPolicy::load(const std::string& path, const Catalog* catalog) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("checkpoint " + path + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("policy", "") != "linear" || doc.value("format_version", 0) != 1) {
    throw Error("checkpoint " + path + ": not a linear policy checkpoint");
  }
  LinearPolicy policy(catalog);
  std::vector<double> tw = doc.at("template_weights").get<std::vector<double>>();
  std::vector<double> aw = doc.at("answer_weights").get<std::vector<double>>();
  if (tw.size() + aw.size() != policy.params_.size()) {
    throw Error("checkpoint " + path + ": parameter count mismatch (catalog changed?)");
  }
  std::copy(tw.begin(), tw.end(), policy.params_.begin());
  std::copy(aw.begin(), aw.end(), policy.params_.begin() + static_cast<long>(tw.size()));
  return policy;
}

// ---- ScriptedPolicy ----

ScriptedPolicy::ScriptedPolicy(const Catalog* catalog, std::vector<StepTemplate> script,
                               int answer_choice)
    : catalog_(catalog), script_(std::move(script)), answer_choice_(answer_choice) {
  if (script_.empty()) throw Error("scripted policy: empty script");
}

StepTemplate ScriptedPolicy::scripted_step(const PolicyContext& ctx) const {
  std::size_t pos = ctx.prefix ? ctx.prefix->steps.size() : 0;
  return script_[std::min(pos, script_.size() - 1)];
}

double ScriptedPolicy::log_prob(const PolicyContext& ctx, const StepTemplate& t) const {
  return t == scripted_step(ctx) ? 0.0 : -1e30;
}

StepTemplate ScriptedPolicy::sample(const PolicyContext& ctx, double, Rng&) const {
  return scripted_step(ctx);
}

double ScriptedPolicy::answer_log_prob(const AnswerSlot& slot, int choice) const {
  int fixed = std::min(answer_choice_, static_cast<int>(slot.choices.size()) - 1);
  return choice == fixed ? 0.0 : -1e30;
}

int ScriptedPolicy::sample_answer(const AnswerSlot& slot, double, Rng&) const {
  return std::min(answer_choice_, static_cast<int>(slot.choices.size()) - 1);
}

// ---- OraclePolicy ----

OraclePolicy::OraclePolicy(const Catalog* catalog, std::vector<int> prelude_entries)
    : catalog_(catalog), prelude_(std::move(prelude_entries)) {}

StepTemplate OraclePolicy::planned_step(const PolicyContext& ctx) const {
  std::size_t pos = ctx.prefix ? ctx.prefix->steps.size() : 0;
  if (pos < prelude_.size()) {
    return StepTemplate{-1, prelude_[pos], false};
  }
  int main_entry = catalog_->match_question(ctx.qa ? ctx.qa->question : "");
  if (pos == prelude_.size()) {
    int inv = catalog_->invocation_index(catalog_->entries()[main_entry].invocation);
    return StepTemplate{inv, main_entry, false};
  }
  return StepTemplate{-1, main_entry, true};
}

double OraclePolicy::log_prob(const PolicyContext& ctx, const StepTemplate& t) const {
  return t == planned_step(ctx) ? 0.0 : -1e30;
}

StepTemplate OraclePolicy::sample(const PolicyContext& ctx, double, Rng&) const {
  return planned_step(ctx);
}

std::string OraclePolicy::slot_value(const AnswerSlot& slot) const {
  int preferred = catalog_->match_question(slot.qa ? slot.qa->question : "");
  if (slot.observation && slot.source_call) {
    int entry = catalog_->entry_for_invocation(*slot.source_call, preferred);
    if (entry >= 0) return catalog_->entries()[entry].extract(*slot.observation);
  }
  int entry = catalog_->entry_by_question(slot.sub_question);
  if (entry < 0) entry = preferred;
  if (!slot.scene) return "unknown";
  return expected_value(*catalog_, entry, *slot.scene);
}

double OraclePolicy::answer_log_prob(const AnswerSlot& slot, int choice) const {
  Rng dummy(0);
  return choice == sample_answer(slot, 1.0, dummy) ? 0.0 : -1e30;
}

int OraclePolicy::sample_answer(const AnswerSlot& slot, double, Rng&) const {
  std::string value = slot_value(slot);
  int entry = catalog_->entry_by_question(slot.sub_question);
  bool numeric = entry >= 0 && catalog_->entries()[entry].numeric;
  int best = best_option_for_value(value, slot.choices, numeric);
  if (best >= 0) return best;
  // free-form fallback list carries text == label entries
  for (std::size_t c = 0; c < slot.choices.size(); ++c) {
    if (slot.choices[c].text == value) return static_cast<int>(c);
  }
  return 0;
}

std::string render_answer(const std::vector<QAOption>& choices, int choice) {
  const auto& c = choices.at(choice);
  if (c.label == c.text) return c.text;
  return c.label + ". " + c.text;
}

int choice_from_answer(const std::vector<QAOption>& choices, const std::string& answer) {
  for (std::size_t c = 0; c < choices.size(); ++c) {
    if (render_answer(choices, static_cast<int>(c)) == answer) return static_cast<int>(c);
  }
  for (std::size_t c = 0; c < choices.size(); ++c) {
    if (choices[c].label == answer || choices[c].text == answer) return static_cast<int>(c);
  }
  return -1;
}

std::vector<QAOption> answer_choices_for(const QAItem& qa) {
  if (!qa.options.empty()) return qa.options;
  return Catalog::fallback_answers();
}

}  // namespace driveagent
