#include "nli/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include <json.hpp>

#include "nli/errors.hpp"
#include "nli/io.hpp"
#include "nli/rng.hpp"
#include "nli/text.hpp"

namespace nli::synth {

namespace {

struct Tok {
  std::string word;
  std::string tag;
};
using Sentence = std::vector<Tok>;

struct Noun {
  const char* sg;
  const char* pl;
};

struct Verb {
  const char* base;
  const char* s3;
  const char* past;
};

constexpr Noun kEverydayNouns[] = {
    {"time", "times"},         {"person", "people"},       {"way", "ways"},
    {"day", "days"},           {"thing", "things"},        {"friend", "friends"},
    {"family", "families"},    {"house", "houses"},        {"city", "cities"},
    {"game", "games"},         {"movie", "movies"},        {"book", "books"},
    {"car", "cars"},           {"job", "jobs"},            {"teacher", "teachers"},
    {"student", "students"},   {"computer", "computers"},  {"phone", "phones"},
    {"question", "questions"}, {"problem", "problems"},    {"idea", "ideas"},
    {"story", "stories"},      {"school", "schools"},      {"company", "companies"},
    {"restaurant", "restaurants"}, {"weekend", "weekends"}, {"song", "songs"},
    {"team", "teams"},         {"country", "countries"},   {"language", "languages"},
    {"picture", "pictures"},   {"video", "videos"},        {"website", "websites"},
    {"dog", "dogs"},           {"child", "children"},      {"woman", "women"},
    {"man", "men"},            {"week", "weeks"},          {"price", "prices"},
    {"store", "stores"},       {"apartment", "apartments"}, {"office", "offices"},
    {"player", "players"},     {"window", "windows"},      {"kitchen", "kitchens"},
    {"answer", "answers"},     {"example", "examples"},    {"event", "events"},
};

constexpr Noun kPoliticsNouns[] = {
    {"government", "governments"}, {"policy", "policies"},   {"election", "elections"},
    {"parliament", "parliaments"}, {"minister", "ministers"}, {"union", "unions"},
    {"law", "laws"},               {"vote", "votes"},         {"party", "parties"},
    {"economy", "economies"},      {"border", "borders"},     {"president", "presidents"},
    {"citizen", "citizens"},       {"tax", "taxes"},          {"treaty", "treaties"},
    {"member", "members"},         {"state", "states"},       {"court", "courts"},
    {"crisis", "crises"},          {"debate", "debates"},     {"budget", "budgets"},
    {"region", "regions"},         {"leader", "leaders"},     {"reform", "reforms"},
};

constexpr Verb kVerbs[] = {
    {"make", "makes", "made"},           {"know", "knows", "knew"},
    {"take", "takes", "took"},           {"see", "sees", "saw"},
    {"want", "wants", "wanted"},         {"use", "uses", "used"},
    {"find", "finds", "found"},          {"give", "gives", "gave"},
    {"need", "needs", "needed"},         {"like", "likes", "liked"},
    {"buy", "buys", "bought"},           {"read", "reads", "read"},
    {"write", "writes", "wrote"},        {"love", "loves", "loved"},
    {"play", "plays", "played"},         {"understand", "understands", "understood"},
    {"change", "changes", "changed"},    {"remember", "remembers", "remembered"},
    {"watch", "watches", "watched"},     {"visit", "visits", "visited"},
    {"enjoy", "enjoys", "enjoyed"},      {"build", "builds", "built"},
    {"leave", "leaves", "left"},         {"bring", "brings", "brought"},
    {"show", "shows", "showed"},         {"explain", "explains", "explained"},
    {"support", "supports", "supported"}, {"hate", "hates", "hated"},
    {"prefer", "prefers", "preferred"},  {"miss", "misses", "missed"},
    {"open", "opens", "opened"},         {"close", "closes", "closed"},
};

constexpr Verb kToVerbs[] = {
    {"want", "wants", "wanted"}, {"need", "needs", "needed"}, {"like", "likes", "liked"},
    {"love", "loves", "loved"},  {"try", "tries", "tried"},   {"prefer", "prefers", "preferred"},
};

constexpr Verb kThatVerbs[] = {
    {"think", "thinks", "thought"},       {"know", "knows", "knew"}, {"believe", "believes", "believed"},
    {"feel", "feels", "felt"},            {"hope", "hopes", "hoped"}, {"say", "says", "said"},
    {"remember", "remembers", "remembered"},
};

constexpr const char* kAdjectives[] = {
    "good",    "new",      "old",     "great",    "big",       "small",    "important", "different",
    "local",   "social",   "real",    "hard",     "simple",    "strong",   "interesting", "difficult",
    "recent",  "public",   "serious", "common",   "popular",   "beautiful", "expensive", "cheap",
    "happy",   "strange",  "funny",   "nice",     "easy",      "huge",     "whole",     "young",
    "special", "perfect",  "terrible", "amazing", "weird",     "useful",   "boring",    "normal",
};

constexpr const char* kAdverbs[] = {
    "really",    "actually", "probably",  "always",    "never",     "often",   "usually",  "also",
    "just",      "still",    "already",   "definitely", "basically", "honestly", "simply",  "certainly",
    "maybe",     "indeed",   "quite",     "generally", "obviously", "clearly", "especially", "sometimes",
};

constexpr const char* kPrepositions[] = {"in", "on", "at", "with", "about", "from", "for", "after", "before",
                                         "during", "without", "near"};
constexpr const char* kModals[] = {"can", "will", "should", "would", "could", "must", "might"};
constexpr const char* kPossessives[] = {"my", "your", "his", "her", "our", "their"};
constexpr const char* kObjectPronouns[] = {"me", "him", "her", "them", "us"};

enum class Spelling { degeminate, th_to_t, w_to_v, drop_final_e, c_to_k };
enum class GrammarTic { a_before_vowel, he_base_verb, the_possessive, lowercase_start, modal_to };

constexpr std::size_t kTemplates = 10;

struct Profile {
  const char* name;
  std::array<const char*, 3> adverbs;
  std::array<const char*, 2> adjectives;
  Spelling spelling;
  GrammarTic grammar;
  std::array<double, kTemplates> template_weights;
  double adverb_rate;
};

// Labels are ascending so that profile index equals class index.
const std::array<Profile, 5> kProfiles = {{
    {"Arvenian", {"actually", "basically", "definitely"}, {"interesting", "huge"}, Spelling::degeminate,
     GrammarTic::a_before_vowel, {3, 2, 1, 3, 1, 1, 2, 1, 2, 2}, 0.35},
    {"Belstrani", {"really", "honestly", "simply"}, {"strange", "serious"}, Spelling::th_to_t,
     GrammarTic::he_base_verb, {4, 1, 2, 1, 2, 1, 1, 2, 1, 1}, 0.25},
    {"Corvic", {"indeed", "certainly", "quite"}, {"beautiful", "important"}, Spelling::w_to_v,
     GrammarTic::the_possessive, {2, 3, 1, 1, 1, 3, 1, 1, 1, 2}, 0.2},
    {"Dunmari", {"probably", "maybe", "sometimes"}, {"nice", "weird"}, Spelling::drop_final_e,
     GrammarTic::lowercase_start, {2, 2, 2, 1, 3, 1, 2, 1, 1, 1}, 0.3},
    {"Eskeline", {"obviously", "clearly", "generally"}, {"terrible", "perfect"}, Spelling::c_to_k,
     GrammarTic::modal_to, {1, 1, 4, 2, 1, 1, 2, 2, 1, 1}, 0.3},
}};

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o'; }

template <typename T, std::size_t N>
const T& pick(Rng& rng, const T (&items)[N]) {
  return items[rng.below(N)];
}

std::size_t pick_weighted(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double r = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (r < weights[i]) return i;
    r -= weights[i];
  }
  return weights.size() - 1;
}

// Everything that varies between authors and languages.
struct Style {
  const Profile* profile = nullptr;  // null: neutral English
  std::vector<double> adverb_weights;
  std::vector<double> adjective_weights;
  std::vector<double> template_weights;
  double adverb_rate = 0.25;
  double spelling_rate = 0.0;  // per eligible word
  double grammar_rate = 0.0;   // per sentence where the tic applies
  double typo_rate = 0.0;      // random character deletion per word
  double cross_tic_rate = 0.0;
  bool politics = false;
};

template <std::size_t N>
std::vector<double> favor(const char* const (&items)[N], std::span<const char* const> favorites, double boost) {
  std::vector<double> w(N, 1.0);
  for (std::size_t i = 0; i < N; ++i) {
    for (const char* f : favorites) {
      if (std::string_view(items[i]) == f) w[i] = boost;
    }
  }
  return w;
}

class Generator {
 public:
  Generator(Rng& rng, const Style& style) : rng_(rng), style_(style) {}

  Sentence sentence() {
    const std::size_t t = pick_weighted(rng_, style_.template_weights);
    Sentence s;
    switch (t) {
      case 0: clause_present(s); break;
      case 1: clause_past(s); break;
      case 2: clause_modal(s); break;
      case 3: that_clause(s); break;
      case 4:
        clause_present(s);
        s.push_back({",", ","});
        s.push_back({rng_.bernoulli(0.7) ? "but" : "and", "CC"});
        clause_past(s);
        break;
      case 5:
        s.push_back({pick(rng_, kPrepositions), "IN"});
        s.push_back({"the", "DT"});
        s.push_back({noun().sg, "NN"});
        s.push_back({",", ","});
        clause_present(s);
        break;
      case 6: to_clause(s); break;
      case 7: question(s); return s;
      case 8: existential(s); break;
      default: copula(s); break;
    }
    s.push_back({rng_.bernoulli(0.9) ? "." : "!", "."});
    return s;
  }

 private:
  struct Subject {
    bool third_singular = false;
    bool pronoun = false;
  };

  const Noun& noun() {
    if (style_.politics && rng_.bernoulli(0.6)) return pick(rng_, kPoliticsNouns);
    return pick(rng_, kEverydayNouns);
  }

  const char* adjective() { return kAdjectives[pick_weighted(rng_, style_.adjective_weights)]; }
  const char* adverb() { return kAdverbs[pick_weighted(rng_, style_.adverb_weights)]; }

  void maybe_adverb(Sentence& s) {
    if (rng_.bernoulli(style_.adverb_rate)) s.push_back({adverb(), "RB"});
  }

  Subject subject(Sentence& s) {
    const auto r = rng_.below(10);
    if (r < 5) {
      static constexpr std::array<std::pair<const char*, bool>, 7> pronouns = {
          {{"I", false}, {"you", false}, {"he", true}, {"she", true}, {"it", true}, {"we", false}, {"they", false}}};
      const auto& [w, third] = pronouns[rng_.below(pronouns.size())];
      s.push_back({w, "PRP"});
      return {third, true};
    }
    if (r < 7) {
      s.push_back({rng_.bernoulli(0.6) ? "the" : "this", "DT"});
      if (rng_.bernoulli(0.4)) s.push_back({adjective(), "JJ"});
      s.push_back({noun().sg, "NN"});
      return {true, false};
    }
    if (r < 9) {
      if (rng_.bernoulli(0.5)) s.push_back({"the", "DT"});
      if (rng_.bernoulli(0.4)) s.push_back({adjective(), "JJ"});
      s.push_back({noun().pl, "NNS"});
      return {false, false};
    }
    s.push_back({pick(rng_, kPossessives), "PRP$"});
    s.push_back({noun().sg, "NN"});
    return {true, false};
  }

  void object(Sentence& s) {
    const auto r = rng_.below(10);
    if (r < 4) {
      s.push_back({rng_.bernoulli(0.5) ? "the" : "a", "DT"});
      if (rng_.bernoulli(0.5)) s.push_back({adjective(), "JJ"});
      s.push_back({noun().sg, "NN"});
    } else if (r < 6) {
      if (rng_.bernoulli(0.5)) s.push_back({adjective(), "JJ"});
      s.push_back({noun().pl, "NNS"});
    } else if (r < 8) {
      s.push_back({pick(rng_, kPossessives), "PRP$"});
      s.push_back({noun().sg, "NN"});
    } else {
      s.push_back({pick(rng_, kObjectPronouns), "PRP"});
    }
  }

  void maybe_pp(Sentence& s) {
    if (!rng_.bernoulli(0.4)) return;
    s.push_back({pick(rng_, kPrepositions), "IN"});
    s.push_back({"the", "DT"});
    s.push_back({noun().sg, "NN"});
  }

  void present_verb(Sentence& s, const Subject& subj, const Verb& v) {
    if (subj.third_singular) {
      s.push_back({v.s3, "VBZ"});
    } else {
      s.push_back({v.base, "VBP"});
    }
  }

  void clause_present(Sentence& s) {
    const Subject subj = subject(s);
    maybe_adverb(s);
    present_verb(s, subj, pick(rng_, kVerbs));
    object(s);
    maybe_pp(s);
  }

  void clause_past(Sentence& s) {
    subject(s);
    maybe_adverb(s);
    s.push_back({pick(rng_, kVerbs).past, "VBD"});
    object(s);
    maybe_pp(s);
  }

  void clause_modal(Sentence& s) {
    subject(s);
    s.push_back({pick(rng_, kModals), "MD"});
    maybe_adverb(s);
    s.push_back({pick(rng_, kVerbs).base, "VB"});
    object(s);
    maybe_pp(s);
  }

  void that_clause(Sentence& s) {
    s.push_back({"I", "PRP"});
    maybe_adverb(s);
    s.push_back({pick(rng_, kThatVerbs).base, "VBP"});
    s.push_back({"that", "IN"});
    clause_present(s);
  }

  void to_clause(Sentence& s) {
    const Subject subj = subject(s);
    maybe_adverb(s);
    present_verb(s, subj, pick(rng_, kToVerbs));
    s.push_back({"to", "TO"});
    s.push_back({pick(rng_, kVerbs).base, "VB"});
    object(s);
  }

  void question(Sentence& s) {
    const std::size_t at = s.size();
    s.push_back({"do", "VBP"});
    const Subject subj = subject(s);
    if (subj.third_singular) s[at].word = "does", s[at].tag = "VBZ";
    s.push_back({pick(rng_, kVerbs).base, "VB"});
    object(s);
    s.push_back({"?", "."});
  }

  void existential(Sentence& s) {
    s.push_back({"there", "EX"});
    if (rng_.bernoulli(0.5)) {
      s.push_back({"is", "VBZ"});
      s.push_back({"a", "DT"});
      if (rng_.bernoulli(0.5)) s.push_back({adjective(), "JJ"});
      s.push_back({noun().sg, "NN"});
    } else {
      s.push_back({"are", "VBP"});
      s.push_back({"many", "JJ"});
      s.push_back({noun().pl, "NNS"});
    }
    s.push_back({pick(rng_, kPrepositions), "IN"});
    s.push_back({"the", "DT"});
    s.push_back({noun().sg, "NN"});
  }

  void copula(Sentence& s) {
    const Subject subj = subject(s);
    if (subj.pronoun && s.back().word == "I") {
      s.push_back({"am", "VBP"});
    } else {
      s.push_back(subj.third_singular ? Tok{"is", "VBZ"} : Tok{"are", "VBP"});
    }
    maybe_adverb(s);
    s.push_back({adjective(), "JJ"});
  }

  Rng& rng_;
  const Style& style_;
};

// Picks "a" or "an" from the following word.
void fix_articles(Sentence& s) {
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i].word == "a" && is_vowel(s[i + 1].word[0])) s[i].word = "an";
  }
}

std::optional<std::string> misspell(const std::string& w, Spelling kind, Rng& rng) {
  if (w.size() < 4) return std::nullopt;
  std::string out = w;
  switch (kind) {
    case Spelling::degeminate:
      for (std::size_t i = 0; i + 1 < out.size(); ++i) {
        if (out[i] == out[i + 1]) {
          out.erase(i, 1);
          return out;
        }
      }
      // Words without a double letter get one instead.
      for (std::size_t i = 1; i + 1 < out.size(); ++i) {
        if (!is_vowel(out[i]) && out[i] != 'y' && out[i] != 'u' && is_vowel(out[i - 1])) {
          out.insert(i, 1, out[i]);
          return out;
        }
      }
      return std::nullopt;
    case Spelling::th_to_t: {
      const auto p = out.find("th");
      if (p == std::string::npos) return std::nullopt;
      out.erase(p + 1, 1);
      return out;
    }
    case Spelling::w_to_v: {
      const auto p = out.find('w');
      if (p == std::string::npos) return std::nullopt;
      out[p] = 'v';
      return out;
    }
    case Spelling::drop_final_e:
      if (out.back() != 'e') {
        if (out.back() == 's' && out[out.size() - 2] == 'e') {
          out.erase(out.size() - 2, 1);
          return out;
        }
        return std::nullopt;
      }
      out.pop_back();
      return out;
    case Spelling::c_to_k: {
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] == 'c' && (i + 1 == out.size() || out[i + 1] != 'h')) {
          out[i] = 'k';
          return out;
        }
      }
      const auto p = out.find("ie");
      if (p == std::string::npos) return std::nullopt;
      std::swap(out[p], out[p + 1]);
      (void)rng;
      return out;
    }
  }
  return std::nullopt;
}

std::string random_typo(const std::string& w, Rng& rng) {
  if (w.size() < 5) return w;
  std::string out = w;
  const std::size_t i = 1 + static_cast<std::size_t>(rng.below(out.size() - 2));
  if (rng.bernoulli(0.5)) {
    out.erase(i, 1);
  } else {
    std::swap(out[i], out[i + 1]);
  }
  return out;
}

bool is_plain_word(const Tok& t) {
  return t.tag != "PRP" && t.tag != "." && t.tag != "," && t.tag != "DT" && t.tag != "EX";
}

// Grammar tics rewrite the tagged sentence before rendering.
void apply_grammar_tic(Sentence& s, GrammarTic tic, bool& lowercase_start) {
  switch (tic) {
    case GrammarTic::a_before_vowel:
      for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if (s[i].word == "an") {
          s[i].word = "a";
          return;
        }
      }
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].tag == "NN" && is_vowel(s[i].word[0]) && i > 0 && s[i - 1].word == "the") {
          s[i - 1].word = "a";
          return;
        }
      }
      return;
    case GrammarTic::he_base_verb:
      for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if ((s[i].word == "he" || s[i].word == "she" || s[i].word == "it") && s[i + 1].tag == "VBZ") {
          for (const auto& v : kVerbs) {
            if (s[i + 1].word == v.s3) {
              s[i + 1].word = v.base;
              return;
            }
          }
        }
      }
      return;
    case GrammarTic::the_possessive:
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].tag == "PRP$") {
          s.insert(s.begin() + static_cast<std::ptrdiff_t>(i), Tok{"the", "DT"});
          return;
        }
      }
      return;
    case GrammarTic::lowercase_start:
      lowercase_start = true;
      return;
    case GrammarTic::modal_to:
      for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if (s[i].tag == "MD") {
          s.insert(s.begin() + static_cast<std::ptrdiff_t>(i + 1), Tok{"to", "TO"});
          return;
        }
      }
      return;
  }
}

std::string render(const Sentence& s, bool lowercase_start) {
  std::string out;
  for (const auto& t : s) {
    const bool punct = t.tag == "." || t.tag == ",";
    if (!out.empty() && !punct) out.push_back(' ');
    out += t.word;
  }
  if (!out.empty() && !lowercase_start && out[0] >= 'a' && out[0] <= 'z') out[0] = static_cast<char>(out[0] - 32);
  return out;
}

Style author_style(const Profile& p, Rng& rng, bool politics) {
  Style st;
  st.profile = &p;
  const double boost = 1.5 + 1.5 * rng.uniform();
  // Each author also carries two personal favourite words.
  std::vector<const char*> adv(p.adverbs.begin(), p.adverbs.end());
  adv.push_back(kAdverbs[rng.below(std::size(kAdverbs))]);
  std::vector<const char*> adj(p.adjectives.begin(), p.adjectives.end());
  adj.push_back(kAdjectives[rng.below(std::size(kAdjectives))]);
  st.adverb_weights = favor(kAdverbs, adv, boost);
  st.adjective_weights = favor(kAdjectives, adj, boost);
  st.template_weights.assign(p.template_weights.begin(), p.template_weights.end());
  for (double& w : st.template_weights) w *= 0.7 + 0.6 * rng.uniform();
  st.adverb_rate = p.adverb_rate;
  st.spelling_rate = 0.01 + 0.03 * rng.uniform();
  st.grammar_rate = 0.02 + 0.05 * rng.uniform();
  st.typo_rate = 0.01;
  st.cross_tic_rate = 0.02;
  st.politics = politics;
  return st;
}

Style neutral_style() {
  Style st;
  st.adverb_weights.assign(std::size(kAdverbs), 1.0);
  st.adjective_weights.assign(std::size(kAdjectives), 1.0);
  st.template_weights.assign(kTemplates, 1.0);
  return st;
}

std::string learner_sentence(Generator& gen, const Style& st, Rng& rng) {
  Sentence s = gen.sentence();
  fix_articles(s);
  bool lowercase_start = false;
  if (rng.bernoulli(st.grammar_rate)) apply_grammar_tic(s, st.profile->grammar, lowercase_start);
  if (rng.bernoulli(st.cross_tic_rate)) {
    apply_grammar_tic(s, kProfiles[rng.below(kProfiles.size())].grammar, lowercase_start);
  }
  for (auto& t : s) {
    if (!is_plain_word(t)) continue;
    if (rng.bernoulli(st.spelling_rate)) {
      if (auto m = misspell(t.word, st.profile->spelling, rng)) t.word = *m;
    } else if (rng.bernoulli(st.typo_rate)) {
      t.word = random_typo(t.word, rng);
    }
  }
  return render(s, lowercase_start);
}

}  // namespace

const std::vector<std::string>& language_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& p : kProfiles) v.emplace_back(p.name);
    return v;
  }();
  return names;
}

std::vector<corpus::AuthorRecord> generate_corpus(const CorpusOptions& options) {
  std::vector<corpus::AuthorRecord> out;
  Rng rng(derive_seed(options.seed, "synthetic-corpus"));
  for (const auto& profile : kProfiles) {
    const std::size_t total = options.authors_per_language + options.europe_authors_per_language;
    for (std::size_t a = 0; a < total; ++a) {
      const bool europe = a >= options.authors_per_language;
      corpus::AuthorRecord rec;
      rec.author_id = std::string(profile.name).substr(0, 3) + (europe ? "-eu-" : "-") + std::to_string(a);
      rec.native_language = profile.name;
      rec.partition = europe ? corpus::Partition::europe : corpus::Partition::non_europe;
      Rng author_rng(derive_seed(rng.next(), rec.author_id));
      const Style st = author_style(profile, author_rng, europe);
      Generator gen(author_rng, st);
      const std::size_t n = europe ? options.europe_sentences_per_author : options.sentences_per_author;
      for (std::size_t i = 0; i < n; ++i) {
        std::string line = learner_sentence(gen, st, author_rng);
        if (author_rng.bernoulli(options.url_rate)) {
          line += author_rng.bernoulli(0.5) ? " https://example.org/post/" : " www.example.com/";
          line += std::to_string(author_rng.below(100000));
        }
        if (author_rng.bernoulli(options.double_space_rate)) {
          const auto p = line.find(' ');
          if (p != std::string::npos) line.insert(p, author_rng.bernoulli(0.5) ? " " : "\t");
        }
        rec.sentences.push_back(std::move(line));
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

std::vector<postag::TaggedSentence> generate_tagged(std::size_t n_sentences, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "synthetic-tagged"));
  Style st = neutral_style();
  std::vector<postag::TaggedSentence> out;
  out.reserve(n_sentences);
  for (std::size_t i = 0; i < n_sentences; ++i) {
    st.politics = rng.bernoulli(0.3);
    Generator gen(rng, st);
    Sentence s = gen.sentence();
    fix_articles(s);
    postag::TaggedSentence ts;
    for (std::size_t k = 0; k < s.size(); ++k) {
      std::string w = s[k].word;
      if (k == 0 && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 32);
      ts.tokens.push_back(std::move(w));
      ts.tags.push_back(s[k].tag);
    }
    out.push_back(std::move(ts));
  }
  return out;
}

// ---- stub checker ------------------------------------------------------------

namespace {

struct RuleInfo {
  const char* id;
  const char* category;
  const char* message;
};

constexpr RuleInfo kRules[] = {
    {"COMMA_PARENTHESIS_WHITESPACE", "TYPOGRAPHY", "Put a space after the comma, not before it."},
    {"DT_DT", "GRAMMAR", "Two determiners in a row."},
    {"DT_PRP", "GRAMMAR", "A determiner before a possessive pronoun."},
    {"EN_A_VS_AN", "MISC", "Use \"an\" before a vowel sound and \"a\" before a consonant sound."},
    {"ENGLISH_WORD_REPEAT_RULE", "MISC", "Possible typo: you repeated a word."},
    {"HE_VERB_AGR", "GRAMMAR", "The pronoun requires a verb in third person singular."},
    {"I_LOWERCASE", "TYPOS", "The personal pronoun \"I\" should be uppercase."},
    {"MD_TO", "GRAMMAR", "A modal verb is not followed by \"to\"."},
    {"MORFOLOGIK_RULE_EN_US", "TYPOS", "Possible spelling mistake found."},
    {"UPPERCASE_SENTENCE_START", "CASING", "This sentence does not start with an uppercase letter."},
};

const RuleInfo& rule(std::string_view id) {
  for (const auto& r : kRules) {
    if (id == r.id) return r;
  }
  throw ConfigError("unknown stub rule " + std::string(id));
}

struct Word {
  std::string text;
  std::int64_t offset;  // code points from the start of the request text
};

bool word_char(char32_t c) { return text::is_letter(c) || c == '\''; }

constexpr std::string_view kThirdPersonPronouns[] = {"he", "she", "it"};
constexpr std::string_view kDeterminers[] = {"the", "a", "an", "this", "that", "these", "those"};

template <std::size_t N>
bool one_of(std::string_view w, const std::string_view (&set)[N]) {
  return std::find(std::begin(set), std::end(set), w) != std::end(set);
}

bool is_base_verb(std::string_view w) {
  for (const auto& v : kVerbs) {
    if (w == v.base && w != v.past) return true;
  }
  return false;
}

bool is_modal(std::string_view w) {
  for (const char* m : kModals) {
    if (w == m) return true;
  }
  return false;
}

bool is_possessive(std::string_view w) {
  for (const char* m : kPossessives) {
    if (w == m) return true;
  }
  return false;
}

}  // namespace

StubChecker::StubChecker(std::unordered_set<std::string> dictionary) : dictionary_(std::move(dictionary)) {}

const std::vector<std::string>& StubChecker::rule_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const auto& r : kRules) v.emplace_back(r.id);
    std::sort(v.begin(), v.end());
    return v;
  }();
  return ids;
}

std::vector<grammar::GrammarMatch> StubChecker::check(std::string_view input) const {
  std::vector<grammar::GrammarMatch> out;
  const std::u32string cps = text::decode_utf8(input);
  std::size_t line_start = 0;
  while (line_start <= cps.size()) {
    std::size_t line_end = cps.find(U'\n', line_start);
    if (line_end == std::u32string::npos) line_end = cps.size();

    std::vector<Word> words;
    for (std::size_t i = line_start; i < line_end;) {
      if (!word_char(cps[i])) {
        if (cps[i] == U',' && i > line_start && text::is_space(cps[i - 1])) {
          out.push_back({"COMMA_PARENTHESIS_WHITESPACE", static_cast<std::int64_t>(i - 1), 2});
        }
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < line_end && word_char(cps[j])) ++j;
      words.push_back({text::encode_utf8(std::u32string_view(cps).substr(i, j - i)), static_cast<std::int64_t>(i)});
      i = j;
    }

    for (std::size_t i = line_start; i < line_end; ++i) {
      if (text::is_space(cps[i])) continue;
      if (cps[i] >= U'a' && cps[i] <= U'z') out.push_back({"UPPERCASE_SENTENCE_START", static_cast<std::int64_t>(i), 1});
      break;
    }

    for (std::size_t k = 0; k < words.size(); ++k) {
      const Word& w = words[k];
      const auto len = static_cast<std::int64_t>(text::decode_utf8(w.text).size());
      const Word* next = k + 1 < words.size() ? &words[k + 1] : nullptr;
      const std::string lower = text::to_lower_utf8(w.text);
      if (w.text == "i") out.push_back({"I_LOWERCASE", w.offset, 1});
      if (!dictionary_.empty() && lower == w.text && !dictionary_.contains(lower)) {
        out.push_back({"MORFOLOGIK_RULE_EN_US", w.offset, len});
      }
      if (!next) continue;
      const std::string nlower = text::to_lower_utf8(next->text);
      const std::int64_t span = next->offset + static_cast<std::int64_t>(text::decode_utf8(next->text).size()) - w.offset;
      if (lower == "a" && is_vowel(nlower[0])) out.push_back({"EN_A_VS_AN", w.offset, len});
      if (lower == "an" && !is_vowel(nlower[0]) && nlower[0] != 'u' && nlower[0] != 'h') {
        out.push_back({"EN_A_VS_AN", w.offset, len});
      }
      if (one_of(lower, kThirdPersonPronouns) && is_base_verb(nlower)) out.push_back({"HE_VERB_AGR", w.offset, span});
      if (lower == "the" && is_possessive(nlower)) out.push_back({"DT_PRP", w.offset, span});
      if (one_of(lower, kDeterminers) && one_of(nlower, kDeterminers)) out.push_back({"DT_DT", w.offset, span});
      if (is_modal(lower) && nlower == "to") out.push_back({"MD_TO", w.offset, span});
      if (lower == nlower) out.push_back({"ENGLISH_WORD_REPEAT_RULE", w.offset, span});
    }
    line_start = line_end + 1;
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.offset, a.rule_id, a.length) < std::tie(b.offset, b.rule_id, b.length);
  });
  return out;
}

std::string StubChecker::check_json(std::string_view text) const {
  nlohmann::ordered_json j;
  j["software"] = {{"name", "nli-stub-checker"}, {"version", "1"}, {"apiVersion", 1}};
  j["language"] = {{"name", "English (US)"}, {"code", "en-US"}};
  nlohmann::ordered_json matches = nlohmann::ordered_json::array();
  for (const auto& m : check(text)) {
    const RuleInfo& r = rule(m.rule_id);
    nlohmann::ordered_json mj;
    mj["message"] = r.message;
    mj["offset"] = m.offset;
    mj["length"] = m.length;
    mj["rule"] = {{"id", r.id}, {"category", {{"id", r.category}}}};
    matches.push_back(mj);
  }
  j["matches"] = matches;
  return j.dump();
}

std::unordered_set<std::string> load_word_set(const std::filesystem::path& frequency_dictionary) {
  std::unordered_set<std::string> out;
  for (const auto& line : io::read_lines(frequency_dictionary)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) continue;
    out.insert(text::to_lower_utf8(line.substr(0, tab)));
  }
  return out;
}

grammar::HttpResponse StubTransport::post_check(std::string_view text, std::string_view language) {
  ++calls_;
  if (language != "en-US") return {400, "unsupported language"};
  return {200, checker_->check_json(text)};
}

// ---- embeddings ---------------------------------------------------------------

std::vector<embedstore::EmbeddingRecord> class_embeddings(std::span<const corpus::Chunk> chunks,
                                                          const EmbeddingOptions& options) {
  constexpr std::size_t d = embedstore::kEmbeddingDim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  std::map<std::string, std::vector<double>> means;
  for (const auto& c : chunks) means.emplace(c.label, std::vector<double>{});
  for (auto& [label, mean] : means) {
    Rng rng(derive_seed(options.seed, "class-mean:" + label));
    mean.resize(d);
    double norm = 0.0;
    for (double& v : mean) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : mean) v *= options.separation / norm;
  }

  std::vector<embedstore::EmbeddingRecord> out;
  const auto emit = [&](const corpus::Chunk& c, const std::string& id, double noise) {
    Rng rng(derive_seed(options.seed, "chunk:" + id));
    embedstore::EmbeddingRecord r;
    r.chunk_id = id;
    r.label = c.label;
    r.model_tag = options.model_tag;
    r.input_size = options.input_size;
    r.vector = means.at(c.label);
    for (double& v : r.vector) v += noise * scale * rng.normal();
    out.push_back(std::move(r));
  };
  for (const auto& c : chunks) {
    emit(c, c.chunk_id, options.noise);
    for (int p : options.slice_percents) {
      emit(c, c.chunk_id + "@" + std::to_string(p), options.noise * std::sqrt(100.0 / static_cast<double>(p)));
    }
  }
  return out;
}

}  // namespace nli::synth
