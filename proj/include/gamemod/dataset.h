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

#ifndef GAMEMOD_DATASET_H_
#define GAMEMOD_DATASET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "gamemod/game.h"

namespace gamemod {

// One line of a game dataset file (JSON Lines):
//   {"id": 0, "num_players": 2, "action_counts": [5, 5],
//    "payoffs": [...], "seed": 1234}
// `payoffs` is the row-major flattening of the [K, |A^1|, ..., |A^K|] tensor.
struct DatasetEntry {
  std::int64_t id = 0;
  std::uint64_t seed = 0;
  NormalFormGame game;
};

std::string EncodeEntry(const DatasetEntry& entry);
DatasetEntry DecodeEntry(const std::string& line);

// I/O failures throw std::runtime_error naming the path.
void WriteDataset(const std::string& path,
                  const std::vector<DatasetEntry>& entries);
std::vector<DatasetEntry> ReadDataset(const std::string& path);

// Samples `count` games with per-game seeds derived from `base_seed`.
// `action_counts` empty selects the general case: 2 or 3 players with 2-4
// actions each, drawn uniformly.
std::vector<DatasetEntry> SampleDataset(const std::vector<int>& action_counts,
                                        int count, std::uint64_t base_seed);

}  // namespace gamemod

#endif  // GAMEMOD_DATASET_H_
