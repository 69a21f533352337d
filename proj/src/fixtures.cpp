#include "kbmrc/fixtures.hpp"

#include <algorithm>
#include <random>

#include "kbmrc/extkb.hpp"
#include "kbmrc/synth.hpp"

namespace kbmrc {

namespace fs = std::filesystem;

Fact make_fact(std::string id, const std::string& subject, const std::string& predicate,
               const std::vector<std::string>& objects) {
  Fact f;
  f.id = std::move(id);
  f.subject = Element::make(subject, Role::kSubject);
  f.predicate = Element::make(predicate, Role::kPredicate);
  for (const auto& o : objects) f.objects.push_back(Element::make(o, Role::kObject));
  return f;
}

Instance make_instance(std::string doc_id, std::string question, std::vector<Fact> facts,
                       Occurrence answer) {
  Instance inst;
  inst.question_tokens = tokenize(question);
  inst.question = std::move(question);
  inst.kb = DocumentKB(doc_id, std::move(facts));
  inst.doc_id = std::move(doc_id);
  inst.answer = answer;
  return inst;
}

namespace {

const std::vector<std::string> kRelationNouns = {"capital", "currency", "mentor",  "rival",
                                                 "partner", "founder",  "sponsor", "leader"};

std::vector<std::string> template_words() {
  std::vector<std::string> words = kRelationNouns;
  for (const char* w : {"what", "who", "is", "the", "of", "has", "which", "in", "does", "name",
                        "sample", "contains", "where", "located", "county", "city", "tell", "me",
                        "have", "and", "a", "it", "contain", "was", "found", "for", "given"}) {
    words.emplace_back(w);
  }
  return words;
}

template <typename T>
T pick(std::mt19937_64& rng, const std::vector<T>& xs) {
  return xs[draw_index(rng, xs.size())];
}

/// `k` distinct indices from [0, n).
std::vector<std::size_t> distinct(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  for (std::size_t i = 0; i < k; ++i) std::swap(all[i], all[i + draw_index(rng, n - i)]);
  all.resize(k);
  return all;
}

/// Shuffles facts, renumbers their ids in document order and relocates the
/// answer, which is given as (index before shuffling, slot).
Instance shuffled_instance(std::mt19937_64& rng, const std::string& doc_id,
                           const std::string& question, std::vector<Fact> facts, int answer_fact,
                           int answer_slot) {
  std::vector<int> perm(facts.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[draw_index(rng, i)]);
  std::vector<Fact> ordered;
  int answer_pos = 0;
  for (std::size_t pos = 0; pos < perm.size(); ++pos) {
    Fact f = facts[static_cast<std::size_t>(perm[pos])];
    f.id = "f" + std::to_string(pos);
    if (perm[pos] == answer_fact) answer_pos = static_cast<int>(pos);
    ordered.push_back(std::move(f));
  }
  return make_instance(doc_id, question, std::move(ordered), {answer_pos, answer_slot});
}

std::string fill(std::string frame, const std::string& key, const std::string& value) {
  const auto at = frame.find(key);
  if (at != std::string::npos) frame.replace(at, key.size(), value);
  return frame;
}

}  // namespace

Dataset separable_fixture(std::uint64_t seed, int n_train, int n_dev) {
  std::mt19937_64 rng(seed);
  const auto names = syllable_names(rng, 300, template_words());
  const std::vector<std::string> frames = {"what is the {r} of {e}", "who is the {r} of {e}",
                                           "name the {r} of {e}"};
  Dataset d;
  for (int i = 0; i < n_train + n_dev; ++i) {
    // Train and dev draw entities from disjoint halves of the name pool.
    const std::size_t half = names.size() / 2;
    auto ent = distinct(rng, half, 7);
    if (i >= n_train) {
      for (auto& e : ent) e += half;
    }
    const auto rel = distinct(rng, kRelationNouns.size(), 3);
    const std::string& s = names[ent[0]];
    const std::string& t = names[ent[1]];
    std::vector<Fact> facts;
    // Every object carries its relation noun, so the gold answer is the only
    // argument sharing a content word with the question.
    const auto object = [&](std::size_t r, std::size_t e) {
      return kRelationNouns[rel[r]] + " " + names[ent[e]];
    };
    for (std::size_t k = 0; k < 3; ++k) {
      facts.push_back(make_fact("", s, "has " + kRelationNouns[rel[k]], {object(k, 2 + k)}));
    }
    // Distractors about another subject, on the relations not asked.
    facts.push_back(make_fact("", t, "has " + kRelationNouns[rel[1]], {object(1, 5)}));
    facts.push_back(make_fact("", t, "has " + kRelationNouns[rel[2]], {object(2, 6)}));
    const std::string q = fill(fill(pick(rng, frames), "{r}", kRelationNouns[rel[0]]), "{e}", s);
    auto inst = shuffled_instance(rng, "sep" + std::to_string(i), q, std::move(facts), 0, 1);
    (i < n_train ? d.train : d.dev).push_back(std::move(inst));
  }
  return d;
}

Dataset chain_fixture(std::uint64_t seed, int n_train, int n_dev) {
  std::mt19937_64 rng(seed);
  const auto names = syllable_names(rng, 200, template_words());
  const std::vector<std::string> frames = {"for the {p} of {a} what is the {r}",
                                           "given the {p} of {a} name the {r}"};
  Dataset d;
  for (int i = 0; i < n_train + n_dev; ++i) {
    const auto ent = distinct(rng, names.size(), 9);
    const auto rel = distinct(rng, kRelationNouns.size(), 4);
    const auto& n = [&](int k) -> const std::string& { return names[ent[static_cast<std::size_t>(k)]]; };
    const std::string p = kRelationNouns[rel[0]];
    const std::string r = kRelationNouns[rel[1]];
    const std::string p2 = kRelationNouns[rel[2]];
    const std::string r2 = kRelationNouns[rel[3]];
    // a=0 b=1 c=2 d=3 e=4 x1=5 y1=6 x2=7 y2=8
    std::vector<Fact> facts = {
        make_fact("", n(0), "has " + p, {n(1)}),  make_fact("", n(1), "has " + r, {n(2)}),
        make_fact("", n(0), "has " + p2, {n(3)}), make_fact("", n(1), "has " + r2, {n(4)}),
        make_fact("", n(5), "has " + r, {n(6)}),  make_fact("", n(7), "has " + r, {n(8)}),
    };
    // The first hop's relation leads the question and the second closes it.
    const std::string q = fill(fill(fill(pick(rng, frames), "{p}", p), "{a}", n(0)), "{r}", r);
    auto inst = shuffled_instance(rng, "chain" + std::to_string(i), q, std::move(facts), 1, 1);
    (i < n_train ? d.train : d.dev).push_back(std::move(inst));
  }
  return d;
}

ExternalKbFixture external_kb_fixture(std::uint64_t seed, int n_train, int n_dev) {
  std::mt19937_64 rng(seed);
  const std::vector<std::string> types = {"protein", "enzyme", "mineral",
                                          "virus",   "alloy",  "pigment"};
  std::vector<std::string> avoid = template_words();
  avoid.insert(avoid.end(), types.begin(), types.end());
  const int per_doc = 4;
  const auto names = syllable_names(rng, (n_train + n_dev) * per_doc, avoid);
  const std::vector<std::string> frames = {"which {t} is in the sample",
                                           "which {t} does the sample contain"};
  ExternalKbFixture fx;
  fx.kb.name = "extkb-fixture";
  for (int i = 0; i < n_train + n_dev; ++i) {
    const auto ty = distinct(rng, types.size(), per_doc);
    std::vector<Fact> facts;
    for (int k = 0; k < per_doc; ++k) {
      const std::string& x = names[static_cast<std::size_t>(i * per_doc + k)];
      facts.push_back(make_fact("", "the sample", "contains", {x}));
      fx.kb.facts.push_back(make_fact("kb" + std::to_string(fx.kb.facts.size()), x, "is a",
                                      {types[ty[static_cast<std::size_t>(k)]]}));
    }
    const std::string q = fill(pick(rng, frames), "{t}", types[ty[0]]);
    auto inst = shuffled_instance(rng, "ext" + std::to_string(i), q, std::move(facts), 0, 1);
    (i < n_train ? fx.data.train : fx.data.dev).push_back(std::move(inst));
  }
  return fx;
}

FusionFixture fusion_fixture(std::uint64_t seed, int n_train, int n_dev) {
  std::mt19937_64 rng(seed);
  // Relation noun, the phrasing the QA training data uses and a phrasing only
  // dev questions and the paraphrase corpus use.
  struct Relation {
    std::string noun;
    std::vector<std::string> seen;
    std::string unseen;
  };
  const std::vector<Relation> relations = {
      {"capital", {"what is the capital of {e}", "tell me the capital of {e}"},
       "which main city does {e} have"},
      {"currency", {"what is the currency of {e}", "tell me the currency of {e}"},
       "which money does {e} use"},
      {"mentor", {"who is the mentor of {e}", "tell me the mentor of {e}"},
       "which teacher does {e} have"},
      {"rival", {"who is the rival of {e}", "tell me the rival of {e}"},
       "which enemy does {e} have"},
      {"founder", {"who is the founder of {e}", "tell me the founder of {e}"},
       "which creator does {e} have"},
      {"leader", {"who is the leader of {e}", "tell me the leader of {e}"},
       "which head does {e} have"},
  };
  std::vector<std::string> avoid = template_words();
  for (const char* w : {"main", "money", "use", "teacher", "enemy", "creator", "head"}) {
    avoid.emplace_back(w);
  }
  const auto names = syllable_names(rng, 60, avoid);

  FusionFixture fx;
  for (int i = 0; i < n_train + n_dev; ++i) {
    const auto ent = distinct(rng, names.size(), 7);
    const auto rel = distinct(rng, relations.size(), 4);
    const std::string& s = names[ent[0]];
    std::vector<Fact> facts;
    for (std::size_t k = 0; k < 4; ++k) {
      facts.push_back(make_fact("", s, "has " + relations[rel[k]].noun, {names[ent[1 + k]]}));
    }
    facts.push_back(make_fact("", names[ent[5]], "has " + relations[rel[0]].noun, {names[ent[6]]}));
    const bool dev = i >= n_train;
    const auto& asked = relations[rel[0]];
    const std::string frame = dev && i % 2 == 1 ? asked.unseen : pick(rng, asked.seen);
    auto inst = shuffled_instance(rng, "fus" + std::to_string(i), fill(frame, "{e}", s),
                                  std::move(facts), 0, 1);
    (dev ? fx.data.dev : fx.data.train).push_back(std::move(inst));
  }

  ParaphraseWorld world;
  for (const auto& r : relations) {
    auto phrasings = r.seen;
    phrasings.push_back(r.unseen);
    world.relations.push_back(std::move(phrasings));
  }
  world.entities = names;
  auto corpus = generate_corpus(world, seed + 1, 3000);
  // Interleave labels before splitting so both halves hold both classes.
  std::vector<ParaphrasePair> mixed;
  const std::size_t half = corpus.size() / 2;
  for (std::size_t k = 0; k < half; ++k) {
    mixed.push_back(corpus[k]);
    mixed.push_back(corpus[half + k]);
  }
  const std::size_t split = mixed.size() * 9 / 10;
  fx.paraphrase_train.assign(mixed.begin(), mixed.begin() + static_cast<long>(split));
  fx.paraphrase_heldout.assign(mixed.begin() + static_cast<long>(split), mixed.end());
  return fx;
}

Instance figure4_instance() {
  std::vector<Fact> facts = {
      make_fact("f0", "St. Johns", "is located", {"in Clinton County"}),
      make_fact("f1", "St. Johns", "is the county seat of", {"Clinton County"}),
      make_fact("f2", "St. Johns", "had a population of", {"7,865"}),
      make_fact("f3", "the city", "is served by", {"US 127"}),
  };
  return make_instance("figure4", "Where is st johns mi located?", std::move(facts), {0, 1});
}

Dataset figure4_fixture(std::uint64_t seed, int n_train) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> avoid = template_words();
  for (const char* w : {"st", "johns", "clinton", "mi", "us", "served", "seat", "population"}) {
    avoid.emplace_back(w);
  }
  const auto names = syllable_names(rng, 120, avoid);
  const std::vector<std::string> states = {"mi", "oh", "wi", "in", "ia"};
  Dataset d;
  for (int i = 0; i < n_train; ++i) {
    const auto ent = distinct(rng, names.size(), 3);
    const std::string town = names[ent[0]];
    std::vector<Fact> facts = {
        make_fact("", town, "is located", {"in " + names[ent[1]] + " county"}),
        make_fact("", town, "is the county seat of", {names[ent[2]] + " county"}),
        make_fact("", town, "had a population of", {std::to_string(1000 + draw_index(rng, 9000))}),
        make_fact("", "the city", "is served by", {"us " + std::to_string(10 + draw_index(rng, 200))}),
    };
    const std::string q = "where is " + town + " " + pick(rng, states) + " located";
    d.train.push_back(
        shuffled_instance(rng, "loc" + std::to_string(i), q, std::move(facts), 0, 1));
  }
  d.dev.push_back(figure4_instance());
  return d;
}

std::vector<fs::path> write_fixtures(const fs::path& dir, std::uint64_t seed) {
  std::vector<fs::path> written;
  auto save_split = [&](const fs::path& sub, const Dataset& d) {
    fs::create_directories(dir / sub);
    save_instances(dir / sub / "train.jsonl", d.train);
    save_instances(dir / sub / "dev.jsonl", d.dev);
    written.push_back(dir / sub / "train.jsonl");
    written.push_back(dir / sub / "dev.jsonl");
  };
  save_split("separable", separable_fixture(seed));
  save_split("chain", chain_fixture(seed));
  save_split("figure4", figure4_fixture(seed));

  const auto ext = external_kb_fixture(seed);
  save_split("extkb", ext.data);
  // The same KB stands in for every selectable slot.
  for (const char* slot : kExternalKbSlots) {
    const auto path = dir / "extkb" / (std::string(slot) + ".jsonl");
    save_external_kb(path, ext.kb);
    written.push_back(path);
  }

  const auto fus = fusion_fixture(seed);
  save_split("fusion", fus.data);
  save_paraphrase_corpus(dir / "fusion" / "paraphrase_train.tsv", fus.paraphrase_train);
  save_paraphrase_corpus(dir / "fusion" / "paraphrase_heldout.tsv", fus.paraphrase_heldout);
  written.push_back(dir / "fusion" / "paraphrase_train.tsv");
  written.push_back(dir / "fusion" / "paraphrase_heldout.tsv");

  fs::create_directories(dir / "paraphrase");
  const auto corpus = generate_synthetic_corpus(seed, 4000);
  std::vector<ParaphrasePair> train, heldout;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    ((i % 10 == 0) ? heldout : train).push_back(corpus[i]);
  }
  save_paraphrase_corpus(dir / "paraphrase" / "train.tsv", train);
  save_paraphrase_corpus(dir / "paraphrase" / "heldout.tsv", heldout);
  written.push_back(dir / "paraphrase" / "train.tsv");
  written.push_back(dir / "paraphrase" / "heldout.tsv");
  return written;
}

}  // namespace kbmrc
