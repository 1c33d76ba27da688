#include "selfalign/prompt.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "selfalign/errors.hpp"
#include "selfalign/rng.hpp"
#include "selfalign/unicode.hpp"

namespace selfalign {

namespace {

using json = nlohmann::json;

constexpr std::string_view kBuiltinVersion = "builtin-1";
constexpr std::string_view kBuiltinInstructionEn =
    "Complete the sentence by choosing one of the two options. Answer with "
    "the chosen option only.";
constexpr std::string_view kBuiltinExplanationEn =
    "Then give a brief reason for your choice.";

std::string require_string(const json& obj, const char* key,
                           const std::string& context) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    throw LoadError(context + ": missing string field \"" + key + "\"");
  }
  std::string value = obj[key].get<std::string>();
  if (value.empty()) {
    throw LoadError(context + ": field \"" + key + "\" must not be empty");
  }
  return value;
}

}  // namespace

std::string_view prompt_mode_name(PromptMode mode) {
  switch (mode) {
    case PromptMode::kAnswerOnly:
      return "answer-only";
    case PromptMode::kAnswerWithExplanation:
      return "answer-with-explanation";
  }
  throw ConfigError("unknown prompt mode value");
}

PromptMode parse_prompt_mode(std::string_view name) {
  if (name == "answer-only") return PromptMode::kAnswerOnly;
  if (name == "answer-with-explanation") return PromptMode::kAnswerWithExplanation;
  throw ConfigError("unknown prompt mode \"" + std::string(name) +
                    "\"; expected answer-only or answer-with-explanation");
}

InstructionCatalog InstructionCatalog::builtin() {
  InstructionCatalog catalog;
  catalog.version_ = std::string(kBuiltinVersion);
  catalog.entries_["en"] = {std::string(kBuiltinInstructionEn),
                            std::string(kBuiltinExplanationEn)};
  return catalog;
}

InstructionCatalog InstructionCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw LoadError("cannot open instruction catalog " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& err) {
    throw LoadError("instruction catalog " + path.string() + ": " + err.what());
  }
  if (!doc.is_object()) {
    throw LoadError("instruction catalog " + path.string() +
                    ": top level must be an object");
  }
  InstructionCatalog catalog;
  catalog.version_ = require_string(doc, "version", path.string());
  if (!doc.contains("entries") || !doc["entries"].is_object()) {
    throw LoadError(path.string() + ": missing object field \"entries\"");
  }
  for (const auto& [language, entry] : doc["entries"].items()) {
    if (language.empty()) {
      throw LoadError(path.string() + ": empty language code in entries");
    }
    if (!entry.is_object()) {
      throw LoadError(path.string() + ": entry for \"" + language +
                      "\" must be an object");
    }
    const std::string context = path.string() + ": entry \"" + language + "\"";
    catalog.entries_[language] = {require_string(entry, "instruction", context),
                                  require_string(entry, "explanation_request", context)};
  }
  if (catalog.entries_.empty()) {
    throw LoadError(path.string() + ": catalog has no entries");
  }
  return catalog;
}

bool InstructionCatalog::contains(std::string_view language) const {
  return entries_.find(std::string(language)) != entries_.end();
}

std::string InstructionCatalog::instruction_for(std::string_view language,
                                                PromptMode mode) const {
  auto it = entries_.find(std::string(language));
  if (it == entries_.end()) {
    throw MissingInstructionError("no instruction for language \"" +
                                  std::string(language) + "\" in catalog " +
                                  version_);
  }
  if (mode == PromptMode::kAnswerOnly) return it->second.instruction;
  return it->second.instruction + " " + it->second.explanation_request;
}

std::vector<CompletedDemo> resolve_demos(const DemoSet& demos,
                                         const ProbeSet& probes) {
  std::vector<CompletedDemo> resolved;
  resolved.reserve(demos.items.size());
  for (const DemoItem& item : demos.items) {
    const Probe* probe = probes.find(item.probe_id);
    if (probe == nullptr) {
      throw LoadError("demonstration probe \"" + item.probe_id +
                      "\" is not in the probe set");
    }
    resolved.push_back({probe, item.answer});
  }
  return resolved;
}

std::string render_completed(const Probe& probe, AnswerOption answer) {
  const std::size_t marker = probe.template_text.find('_');
  if (marker == std::string::npos) {
    throw std::invalid_argument("probe " + probe.probe_id +
                                " has no blank marker");
  }
  std::string out = probe.template_text;
  out.replace(marker, 1, probe.option_text(answer));
  return out;
}

PromptSpec build_prompt(const Probe& test,
                        const std::vector<CompletedDemo>& demos,
                        const InstructionCatalog& catalog, PromptMode mode,
                        std::uint64_t option_order_seed) {
  PromptSpec spec;
  spec.instruction = catalog.instruction_for(test.language, mode);
  spec.demo_lines.reserve(demos.size());
  for (const CompletedDemo& demo : demos) {
    if (demo.probe == nullptr) {
      throw std::invalid_argument("demonstration without a probe");
    }
    if (demo.probe->language != test.language) {
      throw std::invalid_argument("demonstration " + demo.probe->probe_id +
                                  " is not in the test probe's language");
    }
    spec.demo_lines.push_back(render_completed(*demo.probe, demo.answer));
  }
  spec.question_line = test.template_text;

  rng::Xoshiro256StarStar gen(option_order_seed);
  const bool a_first = (gen.next() & 1ull) == 0;
  spec.first_option = a_first ? AnswerOption::kOptionA : AnswerOption::kOptionB;
  spec.options_presented = {test.option_text(spec.first_option),
                            test.option_text(other_option(spec.first_option))};
  spec.mode = mode;
  spec.language = test.language;
  return spec;
}

std::string serialize_prompt(const PromptSpec& spec) {
  std::string out = spec.instruction;
  if (!spec.demo_lines.empty()) {
    out += "\n\n";
    for (std::size_t i = 0; i < spec.demo_lines.size(); ++i) {
      if (i > 0) out += "\n";
      out += spec.demo_lines[i];
    }
  }
  out += "\n\n";
  out += spec.question_line;
  out += "\n\n";
  out += "Options: " + spec.options_presented.first + " / " +
         spec.options_presented.second;
  return out;
}

ParsedAnswer parse_response(std::string_view raw, const Probe& probe) {
  const std::u32string raw32 = unicode::decode_utf8(raw);
  const std::u32string folded = unicode::fold_case(raw32);
  const std::u32string option_a =
      unicode::fold_case(unicode::decode_utf8(probe.option_a));
  const std::u32string option_b =
      unicode::fold_case(unicode::decode_utf8(probe.option_b));

  const std::size_t pos_a = folded.find(option_a);
  const std::size_t pos_b = folded.find(option_b);
  if (pos_a == std::u32string::npos && pos_b == std::u32string::npos) {
    return {std::nullopt, ""};
  }

  AnswerOption value = AnswerOption::kOptionA;
  if (pos_a == std::u32string::npos) {
    value = AnswerOption::kOptionB;
  } else if (pos_b == std::u32string::npos) {
    value = AnswerOption::kOptionA;
  } else if (pos_a != pos_b) {
    // Both occur: the earlier first occurrence wins.
    value = pos_a < pos_b ? AnswerOption::kOptionA : AnswerOption::kOptionB;
  } else {
    // Same position: the longer option wins, so an option embedded in the
    // other is never shadowed by its own substring.
    value = option_a.size() >= option_b.size() ? AnswerOption::kOptionA
                                               : AnswerOption::kOptionB;
  }
  const std::size_t pos = value == AnswerOption::kOptionA ? pos_a : pos_b;
  const std::size_t len =
      value == AnswerOption::kOptionA ? option_a.size() : option_b.size();
  // The case fold maps one codepoint to one codepoint, so folded indices are
  // valid in the unfolded text.
  return {value, unicode::encode_utf8(raw32.substr(pos, len))};
}

}  // namespace selfalign
