#pragma once

// Triplet knowledge bases: document KBs extracted from a single document and
// external KBs used for enhancement, plus the line-delimited JSON dataset
// format that carries them.

#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kbmrc/text.hpp"

namespace kbmrc {

enum class Role { kSubject, kPredicate, kObject };

struct Element {
  std::string surface;   // text as it appeared in the input
  TokenSequence tokens;  // normalized, non-empty
  Role role = Role::kSubject;

  /// Normalized text used as the graph node identity.
  std::string text() const { return join_tokens(tokens); }

  static Element make(std::string surface, Role role);
};

/// Position of an argument inside a KB: slot 0 is the subject, slot k >= 1 is
/// object k-1. Predicates never have an occurrence.
struct Occurrence {
  int fact = 0;
  int slot = 0;
  auto operator<=>(const Occurrence&) const = default;
};

struct Fact {
  std::string id;
  Element subject;
  Element predicate;
  std::vector<Element> objects;

  int num_arguments() const { return 1 + static_cast<int>(objects.size()); }
  const Element& argument(int slot) const { return slot == 0 ? subject : objects.at(slot - 1); }
};

using ArgumentIndex = std::map<std::string, std::vector<Occurrence>>;

/// Every subject and object slot keyed by normalized text. Predicates are not
/// arguments and are never indexed.
ArgumentIndex build_argument_index(const std::vector<Fact>& facts);

class DocumentKB {
 public:
  DocumentKB() = default;
  /// Throws ValidationError on duplicate fact ids or a fact without objects.
  DocumentKB(std::string doc_id, std::vector<Fact> facts);

  const std::string& doc_id() const { return doc_id_; }
  const std::vector<Fact>& facts() const { return facts_; }
  const ArgumentIndex& argument_index() const { return index_; }

  const Element& argument(Occurrence occ) const { return facts_.at(occ.fact).argument(occ.slot); }
  std::string argument_text(Occurrence occ) const { return argument(occ).text(); }

  /// All argument occurrences in document order (fact, then slot).
  std::vector<Occurrence> argument_occurrences() const;
  /// Whether `occ` names an existing subject/object slot.
  bool contains(Occurrence occ) const;

 private:
  std::string doc_id_;
  std::vector<Fact> facts_;
  ArgumentIndex index_;
};

struct ExternalKB {
  std::string name;
  std::vector<Fact> facts;
};

struct Instance {
  std::string doc_id;
  std::string question;
  TokenSequence question_tokens;
  DocumentKB kb;
  Occurrence answer;

  std::string answer_text() const { return kb.argument_text(answer); }
};

/// "subject" or "object:<k>" (k zero-based) <-> slot number.
int parse_slot(const std::string& slot);
std::string format_slot(int slot);

std::vector<Instance> load_instances(const std::filesystem::path& path);
std::vector<Instance> parse_instances(std::istream& in);
void save_instances(const std::filesystem::path& path, const std::vector<Instance>& instances);
std::string to_json_line(const Instance& instance);

ExternalKB load_external_kb(const std::filesystem::path& path, std::string name);
void save_external_kb(const std::filesystem::path& path, const ExternalKB& kb);

struct KbStatistics {
  std::size_t num_documents = 0;
  double facts_per_doc = 0;
  double arguments_per_doc = 0;
  double predicates_per_doc = 0;
  double words_per_argument = 0;
  double words_per_predicate = 0;
  double words_per_question = 0;
};

/// Throws std::invalid_argument on an empty list.
KbStatistics kb_statistics(const std::vector<Instance>& instances);

}  // namespace kbmrc
