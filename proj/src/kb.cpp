#include "kbmrc/kb.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kbmrc/errors.hpp"

namespace kbmrc {

using nlohmann::json;

Element Element::make(std::string surface, Role role) {
  Element e;
  e.tokens = tokenize(surface);
  e.surface = std::move(surface);
  e.role = role;
  if (e.tokens.empty()) throw ValidationError("element has no word tokens: \"" + e.surface + "\"");
  return e;
}

ArgumentIndex build_argument_index(const std::vector<Fact>& facts) {
  ArgumentIndex index;
  for (int f = 0; f < static_cast<int>(facts.size()); ++f) {
    for (int s = 0; s < facts[f].num_arguments(); ++s) {
      index[facts[f].argument(s).text()].push_back({f, s});
    }
  }
  return index;
}

DocumentKB::DocumentKB(std::string doc_id, std::vector<Fact> facts)
    : doc_id_(std::move(doc_id)), facts_(std::move(facts)) {
  std::set<std::string> ids;
  for (const auto& f : facts_) {
    if (f.objects.empty()) throw ValidationError("fact " + f.id + " has no objects");
    if (!ids.insert(f.id).second) throw ValidationError("duplicate fact id " + f.id);
  }
  index_ = build_argument_index(facts_);
}

std::vector<Occurrence> DocumentKB::argument_occurrences() const {
  std::vector<Occurrence> out;
  for (int f = 0; f < static_cast<int>(facts_.size()); ++f) {
    for (int s = 0; s < facts_[f].num_arguments(); ++s) out.push_back({f, s});
  }
  return out;
}

bool DocumentKB::contains(Occurrence occ) const {
  return occ.fact >= 0 && occ.fact < static_cast<int>(facts_.size()) && occ.slot >= 0 &&
         occ.slot < facts_[occ.fact].num_arguments();
}

int parse_slot(const std::string& slot) {
  if (slot == "subject") return 0;
  if (slot.starts_with("object:")) {
    const std::string num = slot.substr(7);
    if (!num.empty() && num.find_first_not_of("0123456789") == std::string::npos) {
      return std::stoi(num) + 1;
    }
  }
  throw ValidationError("bad answer slot \"" + slot + "\"");
}

std::string format_slot(int slot) {
  return slot == 0 ? "subject" : "object:" + std::to_string(slot - 1);
}

namespace {

std::string id_string(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw ValidationError("fact id must be a string or integer");
}

std::vector<Fact> parse_facts(const json& arr) {
  if (!arr.is_array()) throw ValidationError("`facts` must be an array");
  std::vector<Fact> facts;
  for (const auto& jf : arr) {
    Fact f;
    f.id = id_string(jf.at("id"));
    f.subject = Element::make(jf.at("subject").get<std::string>(), Role::kSubject);
    f.predicate = Element::make(jf.at("predicate").get<std::string>(), Role::kPredicate);
    for (const auto& o : jf.at("objects")) {
      f.objects.push_back(Element::make(o.get<std::string>(), Role::kObject));
    }
    if (f.objects.empty()) throw ValidationError("fact " + f.id + " has no objects");
    facts.push_back(std::move(f));
  }
  return facts;
}

json facts_json(const std::vector<Fact>& facts) {
  json arr = json::array();
  for (const auto& f : facts) {
    json objects = json::array();
    for (const auto& o : f.objects) objects.push_back(o.surface);
    arr.push_back({{"id", f.id},
                   {"subject", f.subject.surface},
                   {"predicate", f.predicate.surface},
                   {"objects", objects}});
  }
  return arr;
}

Instance parse_instance(const json& j) {
  Instance inst;
  inst.doc_id = id_string(j.at("doc_id"));
  inst.question = j.at("question").get<std::string>();
  inst.question_tokens = tokenize(inst.question);
  if (inst.question_tokens.empty()) throw ValidationError("question has no word tokens");
  inst.kb = DocumentKB(inst.doc_id, parse_facts(j.at("facts")));

  const auto& ans = j.at("answer");
  const std::string fact_id = id_string(ans.at("fact_id"));
  const std::string slot_name = ans.at("slot").get<std::string>();
  const auto& facts = inst.kb.facts();
  auto it = std::find_if(facts.begin(), facts.end(), [&](const Fact& f) { return f.id == fact_id; });
  if (it == facts.end()) {
    throw ValidationError("answer references unknown fact \"" + fact_id + "\" (" + slot_name + ")");
  }
  inst.answer = {static_cast<int>(it - facts.begin()), parse_slot(slot_name)};
  if (!inst.kb.contains(inst.answer)) {
    throw ValidationError("answer argument \"" + fact_id + "/" + slot_name + "\" does not exist");
  }
  return inst;
}

}  // namespace

std::vector<Instance> parse_instances(std::istream& in) {
  std::vector<Instance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    }
    try {
      out.push_back(parse_instance(j));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

std::vector<Instance> load_instances(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  return parse_instances(in);
}

std::string to_json_line(const Instance& inst) {
  const auto& fact = inst.kb.facts().at(inst.answer.fact);
  json j = {{"doc_id", inst.doc_id},
            {"question", inst.question},
            {"facts", facts_json(inst.kb.facts())},
            {"answer", {{"fact_id", fact.id}, {"slot", format_slot(inst.answer.slot)}}}};
  return j.dump();
}

void save_instances(const std::filesystem::path& path, const std::vector<Instance>& instances) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& inst : instances) out << to_json_line(inst) << '\n';
}

ExternalKB load_external_kb(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open external KB " + path.string());
  ExternalKB kb{std::move(name), {}};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto facts = parse_facts(json::parse(line).at("facts"));
      for (auto& f : facts) kb.facts.push_back(std::move(f));
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return kb;
}

void save_external_kb(const std::filesystem::path& path, const ExternalKB& kb) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  // One fact per record keeps files diff-friendly.
  for (const auto& f : kb.facts) {
    out << json{{"facts", facts_json({f})}}.dump() << '\n';
  }
}

KbStatistics kb_statistics(const std::vector<Instance>& instances) {
  if (instances.empty()) throw std::invalid_argument("kb_statistics: empty instance list");
  KbStatistics s;
  s.num_documents = instances.size();
  double facts = 0, args = 0, arg_words = 0, pred_words = 0, q_words = 0;
  for (const auto& inst : instances) {
    facts += static_cast<double>(inst.kb.facts().size());
    q_words += static_cast<double>(inst.question_tokens.size());
    for (const auto& f : inst.kb.facts()) {
      pred_words += static_cast<double>(f.predicate.tokens.size());
      for (int slot = 0; slot < f.num_arguments(); ++slot) {
        args += 1;
        arg_words += static_cast<double>(f.argument(slot).tokens.size());
      }
    }
  }
  const double n = static_cast<double>(instances.size());
  s.facts_per_doc = facts / n;
  s.arguments_per_doc = args / n;
  s.predicates_per_doc = facts / n;
  s.words_per_argument = args > 0 ? arg_words / args : 0.0;
  s.words_per_predicate = facts > 0 ? pred_words / facts : 0.0;
  s.words_per_question = q_words / n;
  return s;
}

}  // namespace kbmrc
