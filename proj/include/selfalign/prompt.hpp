#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selfalign/probes.hpp"
#include "selfalign/selection.hpp"

namespace selfalign {

/// Whether the prompt asks for the bare option or for the option plus a brief
/// reason (the latter also raises the generation length cap downstream).
enum class PromptMode { kAnswerOnly, kAnswerWithExplanation };

/// Canonical spelling: "answer-only" / "answer-with-explanation".
std::string_view prompt_mode_name(PromptMode mode);

/// Parses a canonical mode name; throws ConfigError on anything else.
PromptMode parse_prompt_mode(std::string_view name);

/// Per-language instruction wording. The explanation request is a single
/// sentence appended to the base instruction in explanation mode.
struct InstructionEntry {
  std::string instruction;
  std::string explanation_request;
};

/// Versioned catalog of per-language instructions. Runs record the catalog
/// version so prompt wording changes are visible in reports.
class InstructionCatalog {
 public:
  /// The built-in catalog (English only).
  static InstructionCatalog builtin();

  /// Loads a catalog JSON file: {"version": ..., "entries": {lang: {
  /// "instruction": ..., "explanation_request": ...}}}.
  static InstructionCatalog load(const std::filesystem::path& path);

  const std::string& version() const { return version_; }
  bool contains(std::string_view language) const;

  /// Full instruction text for a language and mode; throws
  /// MissingInstructionError when the language has no entry.
  std::string instruction_for(std::string_view language, PromptMode mode) const;

 private:
  std::string version_;
  std::map<std::string, InstructionEntry> entries_;
};

/// A demonstration probe resolved against its set, paired with the answer it
/// is completed with.
struct CompletedDemo {
  const Probe* probe = nullptr;
  AnswerOption answer = AnswerOption::kOptionA;
};

/// Looks up every demo probe id; throws LoadError when an id is unknown.
std::vector<CompletedDemo> resolve_demos(const DemoSet& demos,
                                         const ProbeSet& probes);

/// Fully determined prompt content before serialization.
struct PromptSpec {
  std::string instruction;
  std::vector<std::string> demo_lines;
  std::string question_line;
  std::pair<std::string, std::string> options_presented;
  AnswerOption first_option = AnswerOption::kOptionA;
  PromptMode mode = PromptMode::kAnswerOnly;
  std::string language;
};

/// The probe template with its single "_" marker replaced by the chosen
/// option's text; spacing and casing are preserved verbatim.
std::string render_completed(const Probe& probe, AnswerOption answer);

/// Assembles a prompt: catalog instruction for the test language, rendered
/// demonstrations in the given order (empty for zero-shot), the masked
/// question and a seeded coin flip deciding which option is presented first.
/// Throws MissingInstructionError when the catalog lacks the language.
PromptSpec build_prompt(const Probe& test,
                        const std::vector<CompletedDemo>& demos,
                        const InstructionCatalog& catalog, PromptMode mode,
                        std::uint64_t option_order_seed);

/// Byte-exact prompt layout: the instruction, the demonstration lines (one
/// per line, omitted when zero-shot), the question line and the final line
/// "Options: <first> / <second>", as blocks separated by blank lines. UTF-8,
/// "\n" newlines, no trailing newline.
std::string serialize_prompt(const PromptSpec& spec);

/// Outcome of matching a raw model response against the two options.
/// value is empty when neither option occurred (an unparsed response);
/// matched_text is the raw substring that matched.
struct ParsedAnswer {
  std::optional<AnswerOption> value;
  std::string matched_text;
};

/// Case-insensitive search for the two option texts in the raw response.
/// If only one occurs it wins; if both occur the earlier first occurrence
/// wins, and at equal positions the longer option text wins (so an option
/// embedded in the other, e.g. "important" inside "unimportant", never
/// shadows it).
ParsedAnswer parse_response(std::string_view raw, const Probe& probe);

}  // namespace selfalign
