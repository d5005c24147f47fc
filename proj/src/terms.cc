// Copyright 2026 The hypex Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hypex/terms.h"

#include <algorithm>
#include <cctype>

#include "hypex/error.h"

namespace hypex {
namespace {

std::string strip(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

}  // namespace

Term::Term(std::vector<Covariate> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw ConfigurationError("a term needs at least one covariate");
  const bool power = std::all_of(factors_.begin(), factors_.end(),
                                 [&](Covariate c) { return c == factors_.front(); });
  if (factors_.size() > 1 && power) {
    label_ = std::string(to_string(factors_.front())) + "^" + std::to_string(factors_.size());
    return;
  }
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    if (k > 0) label_ += "*";
    label_ += to_string(factors_[k]);
  }
}

Term Term::Parse(std::string_view text) {
  const std::string s = strip(text);
  if (s.empty()) throw ConfigurationError("empty term");
  const auto caret = s.find('^');
  if (caret != std::string::npos) {
    const Covariate c = covariate_from_string(s.substr(0, caret));
    const std::string exponent = s.substr(caret + 1);
    if (exponent.empty() || exponent.size() > 2 ||
        !std::all_of(exponent.begin(), exponent.end(),
                     [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      throw ConfigurationError("bad exponent in term '" + s + "'");
    }
    const int k = std::stoi(exponent);
    if (k < 1) throw ConfigurationError("bad exponent in term '" + s + "'");
    return Term(std::vector<Covariate>(static_cast<std::size_t>(k), c));
  }
  std::vector<Covariate> factors;
  std::size_t start = 0;
  for (;;) {
    const auto star = s.find('*', start);
    factors.push_back(covariate_from_string(s.substr(start, star - start)));
    if (star == std::string::npos) break;
    start = star + 1;
  }
  return Term(std::move(factors));
}

double Term::eval(const UnitRecord& u) const {
  double v = 1.0;
  for (Covariate c : factors_) v *= u.value(c);
  return v;
}

bool Term::is_binary() const {
  return std::all_of(factors_.begin(), factors_.end(),
                     [](Covariate c) { return hypex::is_binary(c); });
}

std::vector<Term> parse_terms(const std::vector<std::string>& texts) {
  std::vector<Term> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(Term::Parse(t));
  return out;
}

std::vector<std::string> term_labels(const std::vector<Term>& terms) {
  std::vector<std::string> out;
  out.reserve(terms.size());
  for (const auto& t : terms) out.push_back(t.label());
  return out;
}

std::vector<Term> main_effect_terms() { return parse_terms({"age", "height", "sex"}); }

std::vector<Term> balance_terms() {
  return parse_terms({"age", "age^2", "height", "height^2", "sex", "sex*age", "sex*height"});
}

}  // namespace hypex
