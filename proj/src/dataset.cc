// Copyright 2026 The gamemod Authors
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


#include "gamemod/dataset.h"

#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace gamemod {

using nlohmann::json;

std::string EncodeEntry(const DatasetEntry& entry) {
  const NormalFormGame& game = entry.game;
  json j;
  j["id"] = entry.id;
  j["num_players"] = game.num_players();
  j["action_counts"] = game.action_counts();
  j["payoffs"] = std::vector<double>(game.payoffs().begin(),
                                     game.payoffs().end());
  j["seed"] = entry.seed;
  return j.dump();
}

DatasetEntry DecodeEntry(const std::string& line) {
  const json j = json::parse(line);
  auto counts = j.at("action_counts").get<std::vector<int>>();
  if (j.at("num_players").get<int>() != static_cast<int>(counts.size())) {
    throw ShapeError("num_players disagrees with action_counts");
  }
  return DatasetEntry{
      j.at("id").get<std::int64_t>(), j.at("seed").get<std::uint64_t>(),
      NormalFormGame(std::move(counts),
                     j.at("payoffs").get<std::vector<double>>())};
}

void WriteDataset(const std::string& path,
                  const std::vector<DatasetEntry>& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& entry : entries) out << EncodeEntry(entry) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<DatasetEntry> ReadDataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<DatasetEntry> entries;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      entries.push_back(DecodeEntry(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_number) +
                               ": " + e.what());
    }
  }
  return entries;
}

std::vector<DatasetEntry> SampleDataset(const std::vector<int>& action_counts,
                                        int count, std::uint64_t base_seed) {
  std::mt19937_64 rng(base_seed);
  std::uniform_int_distribution<int> players(2, 3);
  std::uniform_int_distribution<int> actions(2, 4);
  std::vector<DatasetEntry> entries;
  entries.reserve(count);
  for (int i = 0; i < count; ++i) {
    GameSpec spec{action_counts};
    if (spec.action_counts.empty()) {
      spec.action_counts.resize(players(rng));
      for (int& n : spec.action_counts) n = actions(rng);
    }
    const std::uint64_t seed = rng();
    entries.push_back(DatasetEntry{i, seed, SampleRandomGame(spec, seed)});
  }
  return entries;
}

}  // namespace gamemod
