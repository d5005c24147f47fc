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

#include "hypex/lock.h"

#include <chrono>
#include <ctime>

#include "hypex/error.h"
#include "hypex/hash.h"

namespace hypex {
namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string content_hash(const DesignResult& design, const Json& protocol) {
  const Json doc = {{"design", to_json(design)}, {"protocol", protocol}};
  return sha256_hex(canonical_dump(doc));
}

bool DesignLock::verifies(const DesignResult& design) const {
  return content_hash(design, protocol_) == hash_;
}

Json DesignLock::to_json() const {
  return Json{{"design_id", design_id_},
              {"content_hash", hash_},
              {"protocol", protocol_},
              {"timestamp", timestamp_}};
}

DesignLock DesignLock::FromJson(const Json& j) {
  DesignLock lock;
  try {
    lock.design_id_ = j.at("design_id").get<std::string>();
    lock.hash_ = j.at("content_hash").get<std::string>();
    lock.protocol_ = j.at("protocol");
    lock.timestamp_ = j.at("timestamp").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("lock document: ") + e.what());
  }
  if (lock.hash_.size() != 64) throw ParseError("lock document: content_hash is not SHA-256 hex");
  return lock;
}

DesignLock freeze(const DesignResult& design, const Json& protocol, std::string timestamp) {
  design.validate();
  DesignLock lock;
  lock.hash_ = content_hash(design, protocol);
  lock.design_id_ = std::string(to_string(design.method)) + "-" + lock.hash_.substr(0, 12);
  lock.protocol_ = protocol;
  lock.timestamp_ = timestamp.empty() ? utc_now() : std::move(timestamp);
  return lock;
}

std::size_t AnalysisDataset::position(int id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) {
    throw ConsistencyError("unit id " + std::to_string(id) + " is not in the analysis set");
  }
  return it->second;
}

AnalysisDataset unseal_outcomes(const BlindedDataset& ds, const DesignLock& lock,
                                const DesignResult& design) {
  if (!lock.verifies(design)) {
    throw TamperError("design does not match lock " + lock.design_id() +
                      " (content hash differs)");
  }
  AnalysisDataset ad(lock);
  ad.design_ = design;
  ad.units_.reserve(design.retained_ids.size());
  ad.outcomes_.reserve(design.retained_ids.size());
  for (int id : design.retained_ids) {
    const std::size_t pos = ds.position(id);
    ad.index_.emplace(id, ad.units_.size());
    ad.units_.push_back(ds.units_[pos]);
    ad.outcomes_.push_back(ds.sealed_outcomes_[pos]);
  }
  return ad;
}

}  // namespace hypex
