#include "kbmrc/extkb.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

namespace kbmrc {

const char* to_string(Field f) {
  switch (f) {
    case Field::kSubject:
      return "subject";
    case Field::kPredicate:
      return "predicate";
    case Field::kObject:
      return "object";
  }
  return "?";
}

bool is_external_kb_slot(const std::string& name) {
  return std::any_of(std::begin(kExternalKbSlots), std::end(kExternalKbSlots),
                     [&](const char* s) { return name == s; });
}

FactIndex FactIndex::build(std::shared_ptr<const ExternalKB> kb, const StopWords& stop) {
  FactIndex index;
  index.kb_ = std::move(kb);
  index.stop_ = stop;
  const auto& facts = index.kb_->facts;
  for (int f = 0; f < static_cast<int>(facts.size()); ++f) {
    std::map<std::pair<std::string, Field>, int> tf;
    auto count = [&](const Element& e, Field field) {
      for (const auto& t : e.tokens) {
        if (!stop.contains(t)) ++tf[{t, field}];
      }
    };
    count(facts[f].subject, Field::kSubject);
    count(facts[f].predicate, Field::kPredicate);
    for (const auto& o : facts[f].objects) count(o, Field::kObject);

    std::set<std::string> seen;
    for (const auto& [key, n] : tf) {
      index.postings_[key.first].push_back({f, key.second, n});
      if (seen.insert(key.first).second) ++index.doc_freq_[key.first];
    }
  }
  return index;
}

double FactIndex::idf(const std::string& token) const {
  auto it = doc_freq_.find(token);
  if (it == doc_freq_.end()) return 0.0;
  const double n = static_cast<double>(kb_->facts.size());
  return std::log(1.0 + n / static_cast<double>(it->second));
}

const std::vector<FactIndex::Posting>* FactIndex::postings(const std::string& token) const {
  auto it = postings_.find(token);
  return it == postings_.end() ? nullptr : &it->second;
}

std::vector<RetrievalHit> FactIndex::retrieve(const Element& query, QueryRole role,
                                              const RetrievalConfig& config) const {
  const TokenSequence terms = stop_.remove_from(query.tokens);
  if (terms.empty()) return {};

  // Per fact: unboosted score of each field, indexed by Field.
  std::map<int, std::array<double, 3>> field_scores;
  for (const auto& t : terms) {
    const auto* plist = postings(t);
    if (plist == nullptr) continue;
    const double w = idf(t);
    for (const auto& p : *plist) {
      auto& s = field_scores.try_emplace(p.fact, std::array<double, 3>{0, 0, 0}).first->second;
      s[static_cast<std::size_t>(p.field)] += static_cast<double>(p.tf) * w;
    }
  }

  std::vector<RetrievalHit> hits;
  for (const auto& [fact, s] : field_scores) {
    const double arg_boost = role == QueryRole::kArgument ? config.role_boost : 1.0;
    const double pred_boost = role == QueryRole::kPredicate ? config.role_boost : 1.0;
    const auto subj = s[static_cast<std::size_t>(Field::kSubject)];
    const auto pred = s[static_cast<std::size_t>(Field::kPredicate)];
    const auto obj = s[static_cast<std::size_t>(Field::kObject)];
    const double score = arg_boost * (subj + obj) + pred_boost * pred;
    if (score <= 0) continue;
    Field best = Field::kSubject;
    if (obj > subj) best = Field::kObject;
    if (pred > std::max(subj, obj)) best = Field::kPredicate;
    hits.push_back({fact, score, best});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.fact < b.fact;
  });
  if (hits.size() > config.top_k) hits.resize(config.top_k);
  return hits;
}

std::vector<EnhancementLink> enhancement_links(const Element& element, const FactIndex& index,
                                               const RetrievalConfig& config) {
  std::vector<EnhancementLink> links;
  if (index.empty()) return links;
  const TokenSequence content = default_stopwords().remove_from(element.tokens);
  const std::set<std::string> own(content.begin(), content.end());

  for (const auto& hit : index.retrieve(element, QueryRole::kArgument, config)) {
    const Fact& fact = index.kb().facts[static_cast<std::size_t>(hit.fact)];
    bool shares = false;
    auto scan = [&](const Element& e) {
      for (const auto& t : e.tokens) shares = shares || own.contains(t);
    };
    scan(fact.subject);
    scan(fact.predicate);
    for (const auto& o : fact.objects) scan(o);
    if (!shares) continue;

    if (hit.matched_field == Field::kObject) {
      links.push_back({&fact.predicate, &fact.subject});
    } else if (hit.matched_field == Field::kSubject) {
      for (const auto& o : fact.objects) links.push_back({&fact.predicate, &o});
    }
  }
  return links;
}

nn::Var enhance(nn::Graph& g, nn::Var element, std::span<const EnhancementTerm> terms) {
  if (terms.empty()) return element;
  std::vector<nn::Var> parts{element};
  for (const auto& t : terms) parts.push_back(g.mean(std::initializer_list<nn::Var>{t.predicate, t.argument}));
  return g.sum(parts);
}

}  // namespace kbmrc
