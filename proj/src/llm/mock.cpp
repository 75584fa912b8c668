// Copyright 2026 The review-perturb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "rp/error.hpp"
#include "rp/io.hpp"
#include "rp/llm.hpp"
#include "rp/rng.hpp"
#include "rp/text.hpp"

namespace rp::llm {

using nlohmann::json;

MockProvider::MockProvider(std::vector<MockRule> rules, bool synthetic_fallback)
    : rules_(std::move(rules)),
      rule_hits_(rules_.size(), 0),
      synthetic_fallback_(synthetic_fallback) {}

void MockProvider::add_rule(MockRule rule) {
  std::lock_guard lock(mu_);
  rules_.push_back(std::move(rule));
  rule_hits_.push_back(0);
}

std::shared_ptr<MockProvider> MockProvider::from_script(const fs::path& path) {
  const json j = io::read_json(path);
  std::vector<MockRule> rules;
  for (const auto& r : j.value("rules", json::array())) {
    MockRule rule;
    if (r.contains("digest")) rule.digest = r["digest"].get<std::string>();
    if (r.contains("tag")) rule.tag_prefix = r["tag"].get<std::string>();
    if (r.contains("text")) rule.responses.push_back(r["text"].get<std::string>());
    for (const auto& t : r.value("responses", json::array())) {
      rule.responses.push_back(t.get<std::string>());
    }
    rule.status = r.value("status", 200);
    rule.finish_reason = parse_finish_reason(r.value("finish_reason", "complete"));
    if (!rule.digest && !rule.tag_prefix) {
      throw Error(ErrorCode::kConfigError,
                  path.string() + ": mock rule needs 'digest' or 'tag'");
    }
    rules.push_back(std::move(rule));
  }
  return std::make_shared<MockProvider>(std::move(rules),
                                        j.value("synthetic_fallback", true));
}

ProviderReply MockProvider::call(const Request& request) {
  ++calls_;
  const int now = ++in_flight_;
  int seen = max_in_flight_.load();
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  struct Leave {
    std::atomic<int>& n;
    ~Leave() { --n; }
  } leave{in_flight_};
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);

  std::optional<ProviderReply> scripted;
  {
    std::lock_guard lock(mu_);
    const std::string key = digest(request);
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      const auto& rule = rules_[i];
      const bool hit =
          (rule.digest && *rule.digest == key) ||
          (rule.tag_prefix && request.request_tag.rfind(*rule.tag_prefix, 0) == 0);
      if (!hit) continue;
      ProviderReply reply;
      reply.status = rule.status;
      reply.finish_reason = rule.finish_reason;
      if (!rule.responses.empty()) {
        reply.text = rule.responses[std::min(rule_hits_[i], rule.responses.size() - 1)];
      }
      if (rule.status != 200) reply.error = "scripted failure";
      ++rule_hits_[i];
      scripted = std::move(reply);
      break;
    }
  }
  if (scripted) return *scripted;
  if (!synthetic_fallback_) {
    return {404, "", FinishReason::kError,
            "no mock rule for tag '" + request.request_tag + "'"};
  }
  return {200, synthetic_response(request), FinishReason::kComplete, ""};
}

// Synthetic responder -------------------------------------------------------

namespace {

constexpr std::string_view kExaggeration = "Unlike all previous methods, ";
constexpr std::string_view kReviewHarshness =
    "This fatally flawed submission does not deserve attention: ";
constexpr std::string_view kRebuttalHostility =
    "Any competent reviewer would have noticed that ";
constexpr std::string_view kVagueReply = "We will consider this suggestion.";
constexpr std::string_view kFormatReminder = "Please follow the output format exactly";

const std::vector<std::pair<std::string, std::string>>& typo_table() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"the", "teh"},         {"results", "resluts"}, {"these", "thes"},
      {"which", "wich"},      {"and", "adn"},         {"with", "wiht"},
      {"method", "methdo"},   {"model", "modle"},     {"that", "taht"},
      {"training", "trainign"}, {"performance", "perfomance"},
      {"propose", "porpose"}, {"our", "oru"},         {"this", "tihs"},
  };
  return table;
}

bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '-' || c == '\'';
}

std::size_t count_word(std::string_view hay, std::string_view word) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(word); pos != std::string_view::npos;
       pos = hay.find(word, pos + 1)) {
    const bool left = pos == 0 || !is_word_char(hay[pos - 1]);
    const std::size_t end = pos + word.size();
    const bool right = end >= hay.size() || !is_word_char(hay[end]);
    if (left && right) ++n;
  }
  return n;
}

std::size_t count_sub(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::size_t typo_count(std::string_view text) {
  std::size_t n = 0;
  for (const auto& [right, wrong] : typo_table()) n += count_word(text, wrong);
  return n;
}

std::string lower_first(std::string_view s) {
  std::string out(s);
  if (out.size() > 1 && out[0] >= 'A' && out[0] <= 'Z' &&
      out[1] >= 'a' && out[1] <= 'z') {
    out[0] = static_cast<char>(out[0] - 'A' + 'a');
  }
  return out;
}

std::string add_typos(std::string_view sentence) {
  std::string out;
  std::size_t i = 0;
  bool changed = false;
  while (i < sentence.size()) {
    if (!is_word_char(sentence[i])) {
      out.push_back(sentence[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < sentence.size() && is_word_char(sentence[j])) ++j;
    std::string word(sentence.substr(i, j - i));
    for (const auto& [right, wrong] : typo_table()) {
      if (word == right) {
        word = wrong;
        changed = true;
        break;
      }
    }
    out += word;
    i = j;
  }
  if (!changed) out = "Teh " + lower_first(out);
  return out;
}

std::string blur_numbers(std::string_view sentence) {
  static const std::regex number(R"([0-9]+(?:[.,][0-9]+)*(?:e-?[0-9]+)?k?%?)");
  std::string s(sentence);
  std::string out = std::regex_replace(s, number, "several");
  if (out == s) out = "Broadly speaking, " + lower_first(s);
  return out;
}

struct Candidate {
  std::string sentence;
  bool has_digit = false;
};

// Sentences of at least six words on ordinary prose lines.
std::vector<Candidate> prose_sentences(std::string_view content,
                                       bool weaknesses_only) {
  std::vector<Candidate> out;
  bool in_math = false;
  bool in_weaknesses = !weaknesses_only;
  for (auto line : text::split_lines(content)) {
    const auto t = text::trim(line);
    if (weaknesses_only) {
      if (t.rfind("Weaknesses:", 0) == 0) {
        in_weaknesses = true;
        continue;
      }
      if (in_weaknesses && t.empty()) in_weaknesses = false;
    }
    if (t.rfind("$$", 0) == 0) {
      in_math = !in_math;
      continue;
    }
    if (!in_weaknesses || in_math || t.empty() || t[0] == '#' || t[0] == '|' ||
        t.find_first_of("$\\") != std::string_view::npos) {
      continue;
    }
    std::string_view body = t;
    if (body.rfind("- ", 0) == 0) body.remove_prefix(2);
    std::size_t start = 0;
    for (std::size_t i = 0; i < body.size(); ++i) {
      const char c = body[i];
      const bool end_mark = c == '.' || c == '?' || c == '!';
      if (!end_mark) continue;
      if (i + 1 < body.size() && body[i + 1] != ' ') continue;
      auto sentence = text::trim(body.substr(start, i + 1 - start));
      start = i + 1;
      if (text::words(sentence).size() < 6) continue;
      Candidate cand{std::string(sentence), false};
      cand.has_digit = std::any_of(sentence.begin(), sentence.end(),
                                   [](char ch) { return ch >= '0' && ch <= '9'; });
      out.push_back(std::move(cand));
    }
  }
  return out;
}

std::string first_words(std::string_view s, std::size_t n) {
  const auto w = text::words(s);
  std::string out;
  for (std::size_t i = 0; i < std::min(n, w.size()); ++i) {
    if (i) out += ' ';
    out += w[i];
  }
  return out;
}

std::string last_words(std::string_view s, std::size_t n) {
  const auto w = text::words(s);
  std::string out;
  const std::size_t from = w.size() > n ? w.size() - n : 0;
  for (std::size_t i = from; i < w.size(); ++i) {
    if (i > from) out += ' ';
    out += w[i];
  }
  return out;
}

std::string edit_block(std::string_view original, std::string_view replacement) {
  std::string out;
  out += "1.Text Span to Edit\n";
  out += "-Start Words: " + first_words(original, 4) + "\n";
  out += "-Ending Words: " + last_words(original, 4) + "\n";
  out += "2. Edited Text Span\n";
  out += std::string(replacement) + "\n";
  return out;
}

std::string_view after_last(std::string_view prompt, std::string_view marker) {
  const auto pos = prompt.rfind(marker);
  if (pos == std::string_view::npos) return prompt;
  return prompt.substr(pos + marker.size());
}

std::vector<std::string> split_tag(std::string_view tag) {
  return text::split(tag, '/');
}

std::string perturbation_response(const Request& req, const std::string& aspect) {
  const std::string_view prompt = req.user_prompt;
  const bool review = aspect.rfind("review.", 0) == 0;
  const std::string_view content =
      after_last(prompt, review ? "Review Content:\n"
                 : aspect.rfind("rebuttal.", 0) == 0 ? "Rebuttal Content:\n"
                                                     : "Paper Content:\n");
  auto candidates = prose_sentences(content, review);
  if (candidates.empty()) return "The text needs no edits.\n";

  const std::uint64_t h = fnv1a64(prompt);
  SeededRng rng(h);
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  if (aspect == "paper.soundness") {
    std::stable_partition(order.begin(), order.end(),
                          [&](std::size_t i) { return candidates[i].has_digit; });
  }
  std::size_t want = 1;
  if (aspect == "paper.presentation" || aspect.rfind("rebuttal.", 0) == 0) {
    want = 1 + h % 2;
  }
  want = std::min(want, order.size());
  std::vector<std::size_t> chosen(order.begin(), order.begin() + want);
  std::sort(chosen.begin(), chosen.end());

  std::string out;
  for (std::size_t idx : chosen) {
    const std::string& s = candidates[idx].sentence;
    std::string replacement;
    if (aspect == "paper.contribution") {
      replacement = std::string(kExaggeration) + lower_first(s);
    } else if (aspect == "paper.soundness") {
      replacement = blur_numbers(s);
    } else if (aspect == "paper.presentation" || aspect == "rebuttal.presentation") {
      replacement = add_typos(s);
    } else if (aspect == "review.tone") {
      replacement = std::string(kReviewHarshness) + lower_first(s);
    } else if (aspect == "rebuttal.tone") {
      replacement = std::string(kRebuttalHostility) + lower_first(s);
    } else if (aspect == "rebuttal.completeness") {
      replacement = std::string(kVagueReply);
    } else {
      replacement = s;
    }
    out += edit_block(s, replacement);
  }
  if (aspect == "paper.presentation" && h % 7 == 0) {
    // an edit whose anchors do not occur in the text
    out += edit_block("Quantum annealing schedules were never evaluated here.",
                      "Quantum aneling schedules was never evaluated here.");
  }
  return out;
}

std::string paper_title(std::string_view content) {
  for (auto line : text::split_lines(content)) {
    auto t = text::trim(line);
    if (!t.empty() && t[0] == '#') {
      t.remove_prefix(t.find_first_not_of('#'));
      return std::string(text::trim(t));
    }
  }
  return "the submission";
}

std::string bucket_response(const Request& req) {
  const auto content = after_last(req.user_prompt, "Paper Content:\n");
  const std::string title = paper_title(content);
  const std::vector<std::array<std::string, 3>> claims = {{
      {"The paper provides no ablation study of its core component.",
       "Section 4.2 reports an ablation that removes the core component.",
       "Without an ablation the source of the gains would be unclear."},
      {"All experiments in \"" + title + "\" use a single random seed.",
       "The experiments section states that every number is averaged over 3 seeds.",
       "Single-seed results would not support claims about variance."},
      {"The method section never defines the training objective.",
       "The method section defines the loss with an explicit regularization term.",
       "An undefined objective would make the method irreproducible."},
      {"No comparison against established baselines is reported.",
       "The results table compares against baselines on every benchmark.",
       "Missing baselines would make the improvements impossible to judge."},
      {"The paper omits all implementation details and hyperparameters.",
       "Implementation details and hyperparameters are listed in Section 3.1.",
       "Missing details would prevent independent replication."},
  }};
  std::string out;
  for (std::size_t i = 0; i < claims.size(); ++i) {
    out += std::to_string(i + 1) + ". False Claim: " + claims[i][0] + "\n";
    out += "Why the claim is false: " + claims[i][1] + "\n";
    out += "Why the claim is weakness: " + claims[i][2] + "\n\n";
  }
  return out;
}

int clamp(int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); }

std::string reviewer_response(const Request& req) {
  const auto content = after_last(req.user_prompt, "Paper Content:\n");
  const std::string title = paper_title(content);
  const std::uint64_t h = fnv1a64(title);
  int c = 3;
  int s = (h >> 3) % 2 ? 3 : 2;
  int p = 3;
  int r = std::array<int, 4>{5, 6, 6, 8}[h % 4];
  if (count_sub(content, kExaggeration) > 0) {
    c += 1;
    r += 1;
  }
  if (count_word(content, "several") >= 2) s -= 1;
  if (typo_count(content) >= 3) {
    p -= 1;
    r -= 1;
  }
  std::ostringstream out;
  out << "Summary:\nThe paper \"" << title
      << "\" proposes a method and evaluates it on standard benchmarks.\n\n"
      << "Strengths:\n- The problem is relevant.\n- The experiments are broad.\n\n"
      << "Weaknesses:\n- Some design choices are not fully justified.\n\n"
      << "Contribution: " << clamp(c, 1, 4) << "\n"
      << "Soundness: " << clamp(s, 1, 4) << "\n"
      << "Presentation: " << clamp(p, 1, 4) << "\n"
      << "Rating: " << clamp(r, 1, 10) << "\n";
  return out.str();
}

std::vector<int> labelled_ints(std::string_view region, std::string_view label) {
  std::vector<int> out;
  for (auto line : text::split_lines(region)) {
    auto t = text::trim(line);
    if (t.rfind(label, 0) != 0) continue;
    t.remove_prefix(label.size());
    t = text::trim(t);
    if (!t.empty() && t[0] >= '0' && t[0] <= '9') {
      out.push_back(std::atoi(std::string(t).c_str()));
    }
  }
  return out;
}

double mean_or(const std::vector<int>& v, double fallback) {
  if (v.empty()) return fallback;
  double s = 0;
  for (int x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string decision_for(int overall) {
  if (overall <= 5) return "Reject";
  if (overall <= 7) return "Accept as Poster";
  if (overall == 8) return "Accept as Spotlight";
  return "Accept as Oral";
}

std::string meta_response(const Request& req) {
  const std::string_view prompt = req.user_prompt;
  const std::string_view header = "Reviews & Rebuttals Content:";
  const auto split = prompt.rfind(header);
  const std::string_view reviews =
      split == std::string_view::npos ? std::string_view{} : prompt.substr(split);
  std::string_view paper = prompt.substr(0, split);
  paper = after_last(paper, "Paper Content:\n");

  enum class V { kNone, kDimension, kTemplate } variant = V::kNone;
  if (prompt.find("Justification For Why Not Higher Score") != std::string_view::npos) {
    variant = V::kTemplate;
  } else if (prompt.find("Dimension Scores (1 to 4)") != std::string_view::npos) {
    variant = V::kDimension;
  }

  const double m = mean_or(labelled_ints(reviews, "Rating:"), 5.0);
  double dc = mean_or(labelled_ints(reviews, "Contribution:"), 3.0);
  double ds = mean_or(labelled_ints(reviews, "Soundness:"), 3.0);
  double dp = mean_or(labelled_ints(reviews, "Presentation:"), 3.0);
  int eff = 0;

  if (count_sub(paper, kExaggeration) > 0) {
    dc += 1;
    if (variant != V::kTemplate) eff += 1;
  }
  if (count_word(paper, "several") >= 2) {
    ds -= 1;
    if (variant == V::kTemplate) eff -= 1;
  }
  if (typo_count(paper) >= 3) {
    dp -= 1;
    if (variant == V::kDimension) eff -= 1;
  }
  if (count_sub(reviews, "fatally flawed") > 0 && variant != V::kTemplate) eff -= 1;

  // Reviews padded with extra weakness bullets confuse the simulated
  // meta-reviewer in a content-dependent direction.
  std::size_t max_bullets = 0;
  std::size_t bullets = 0;
  bool in_weak = false;
  for (auto line : text::split_lines(reviews)) {
    auto t = text::trim(line);
    if (t.rfind("Weaknesses:", 0) == 0) {
      in_weak = true;
      bullets = 0;
      continue;
    }
    if (in_weak && t.rfind("- ", 0) == 0) {
      max_bullets = std::max(max_bullets, ++bullets);
    } else if (in_weak && t.empty()) {
      in_weak = false;
    }
  }
  if (max_bullets >= 5) {
    eff += static_cast<int>(fnv1a64(reviews) % 5) - 2;
  }

  if (count_sub(reviews, kRebuttalHostility) > 0 && variant == V::kTemplate) eff -= 1;
  if (count_sub(reviews, kVagueReply) > 0 && variant != V::kNone) eff -= 1;

  const int overall = clamp(static_cast<int>(std::floor(m + 0.5)) + eff, 1, 10);
  const bool reminded = prompt.find(kFormatReminder) != std::string_view::npos;
  const bool drop_decision =
      variant == V::kNone && !reminded && fnv1a64(prompt) % 11 == 3;

  std::ostringstream out;
  if (variant == V::kDimension) {
    auto dim = [](double v) { return clamp(static_cast<int>(std::floor(v + 0.5)), 1, 4); };
    out << "Contribution: " << dim(dc) << "\n"
        << "Soundness: " << dim(ds) << "\n"
        << "Presentation: " << dim(dp) << "\n"
        << "Justification: The dimension scores follow the reviews and the "
           "author responses.\n";
  } else if (variant == V::kTemplate) {
    out << "Metareview: The reviewers agree the topic is relevant and "
           "disagree on the strength of the evidence.\n"
        << "Justification For Why Not Higher Score: Several concerns about the "
           "evaluation remain open.\n"
        << "Justification For Why Not Lower Score: The core idea is sound and "
           "the rebuttal addresses part of the criticism.\n";
  }
  out << "Overall Score: " << overall << "\n";
  if (!drop_decision) out << "Final Decision: " << decision_for(overall) << "\n";
  return out.str();
}

}  // namespace

std::string synthetic_response(const Request& request) {
  const auto parts = split_tag(request.request_tag);
  const std::string stage = parts.empty() ? "" : parts[0];
  if (stage == "perturb" && parts.size() >= 2) {
    return perturbation_response(request, parts[1]);
  }
  if (stage == "bucket") return bucket_response(request);
  if (stage == "review") return reviewer_response(request);
  if (stage == "meta") return meta_response(request);
  if (stage == "taxonomy") return "Contribution: no\nSoundness: no\n";
  return "OK\n";
}

}  // namespace rp::llm
