// Copyright 2026 The derfl Authors
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

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "derfl/fedcore.hpp"

namespace derfl {

struct ClusterAssignment {
  std::map<std::string, int> clusters;  // client_id -> cluster in [0, k)
  int k = 1;
};

// Agglomerative clustering of client update vectors: Euclidean distance,
// average linkage, merging while the closest pair of clusters is within
// `tau`. Cluster ids follow the ascending smallest member id. Throws
// ShapeError on mismatched lengths and InsufficientDataError when empty.
ClusterAssignment HcPartition(const std::map<std::string, std::vector<double>>& deltas,
                              double tau);

// Index of the model with the lowest mean loss on `train`; ties go to the
// lowest index.
int IfcaAssign(const SupervisedSet& train, std::span<const ModelParams> models);

// True when both maps cover the same clients and induce the same partition,
// whatever the cluster labels are.
bool SamePartition(const std::map<std::string, int>& a,
                   const std::map<std::string, int>& b);

// One-shot hierarchical clustering round driver. Before clustering the round
// is plain FedAvg; on the clustering round every client trains from its
// current model, the server clusters the deltas and aggregates per cluster;
// afterwards each cluster runs FedAvg independently. Clusters with no
// participant keep their model.
RoundReport HcRound(ServerState& state, std::span<const Client> clients,
                    const FLConfig& config, int round_index, const RunOptions& options);

// Iterative cluster self-selection: all k models are broadcast, each
// participant trains the one with its lowest loss, the server aggregates per
// cluster. Clusters with no participant keep their model.
RoundReport IfcaRound(ServerState& state, std::span<const Client> clients,
                      const FLConfig& config, int round_index, const RunOptions& options);

// Whether hc round `round_index` (0-based) is a clustering round.
bool IsHcClusteringRound(const ClusterConfig& cluster, int round_index);

}  // namespace derfl
