#include "nli/lingfeat/edit_ops.hpp"

#include <algorithm>

#include "nli/text.hpp"

namespace nli::lingfeat {

std::string SubstOp::key() const {
  std::string out;
  switch (kind) {
    case Kind::insert:
      out = "I:";
      text::append_utf8(out, to_char.value_or(U'?'));
      break;
    case Kind::remove:
      out = "D:";
      text::append_utf8(out, from_char.value_or(U'?'));
      break;
    case Kind::replace:
      out = "R:";
      text::append_utf8(out, from_char.value_or(U'?'));
      out.push_back('>');
      text::append_utf8(out, to_char.value_or(U'?'));
      break;
  }
  return out;
}

bool SubstOp::valid() const noexcept {
  switch (kind) {
    case Kind::insert: return !from_char && to_char.has_value();
    case Kind::remove: return from_char.has_value() && !to_char;
    case Kind::replace: return from_char && to_char && *from_char != *to_char;
  }
  return false;
}

std::vector<SubstOp> EditScript::ops() const {
  std::vector<SubstOp> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.op);
  return out;
}

EditScript edit_ops(std::u32string_view a, std::u32string_view b) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  std::vector<std::size_t> d((m + 1) * (n + 1));
  const auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (n + 1) + j]; };
  for (std::size_t i = 0; i <= m; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= n; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t sub = at(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1);
      at(i, j) = std::min({sub, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  EditScript script;
  script.distance = at(m, n);
  std::size_t i = m;
  std::size_t j = n;
  while (i > 0 || j > 0) {
    const std::size_t cur = at(i, j);
    if (i > 0 && j > 0 && a[i - 1] == b[j - 1] && at(i - 1, j - 1) == cur) {
      --i;
      --j;
    } else if (i > 0 && j > 0 && at(i - 1, j - 1) + 1 == cur) {
      script.steps.push_back({SubstOp::replace(a[i - 1], b[j - 1]), i - 1});
      --i;
      --j;
    } else if (i > 0 && at(i - 1, j) + 1 == cur) {
      script.steps.push_back({SubstOp::remove(a[i - 1]), i - 1});
      --i;
    } else {
      script.steps.push_back({SubstOp::insert(b[j - 1]), i});
      --j;
    }
  }
  std::reverse(script.steps.begin(), script.steps.end());
  return script;
}

EditScript edit_ops(std::string_view word, std::string_view correction) {
  return edit_ops(text::decode_utf8(word), text::decode_utf8(correction));
}

std::u32string apply_edit_steps(std::u32string_view word, const std::vector<EditStep>& steps) {
  std::u32string out;
  std::size_t cursor = 0;
  for (const auto& step : steps) {
    const std::size_t pos = std::min(step.position, word.size());
    if (pos > cursor) {
      out.append(word.substr(cursor, pos - cursor));
      cursor = pos;
    }
    switch (step.op.kind) {
      case SubstOp::Kind::insert:
        out.push_back(*step.op.to_char);
        break;
      case SubstOp::Kind::remove:
        cursor = pos + 1;
        break;
      case SubstOp::Kind::replace:
        out.push_back(*step.op.to_char);
        cursor = pos + 1;
        break;
    }
  }
  if (cursor < word.size()) out.append(word.substr(cursor));
  return out;
}

std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1), prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t osa_distance(std::u32string_view a, std::u32string_view b, std::size_t max_distance) {
  const std::size_t len_diff = a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
  if (len_diff > max_distance) return max_distance + 1;
  const std::size_t n = b.size();
  std::vector<std::size_t> prev2(n + 1), prev(n + 1), cur(n + 1);
  for (std::size_t j = 0; j <= n; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    std::size_t row_min = cur[0];
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      std::size_t v = std::min({prev[j - 1] + cost, prev[j] + 1, cur[j - 1] + 1});
      if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) v = std::min(v, prev2[j - 2] + 1);
      cur[j] = v;
      row_min = std::min(row_min, v);
    }
    if (row_min > max_distance) return max_distance + 1;
    std::swap(prev2, prev);
    std::swap(prev, cur);
  }
  return std::min(prev[n], max_distance + 1);
}

}  // namespace nli::lingfeat
