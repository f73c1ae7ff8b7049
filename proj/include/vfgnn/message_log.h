// Copyright 2026 The vfgnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Record of every simulated message, with payload sizes as they would appear
// on the wire (dense values as float32).

#ifndef VFGNN_MESSAGE_LOG_H_
#define VFGNN_MESSAGE_LOG_H_

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace vfgnn {

enum class MessageKind {
  kPublicParams,         // server -> client download
  kProjectionSeed,       // server -> client, 8-byte seed
  kAggregate,            // client -> client neighbourhood matrix
  kIndividualEmbedding,  // client -> client raw neighbour embeddings
  kGradientTernary,      // client -> server sparse quantized gradient
  kGradientDense,        // client -> server float gradient
};

enum class Phase { kDownload, kExchange, kUpload };

std::string_view message_kind_name(MessageKind kind);
// Throws InvalidArgument on an unknown name.
MessageKind parse_message_kind(std::string_view name);
Phase phase_of(MessageKind kind);

constexpr int kServer = -1;
constexpr std::uint64_t kDenseHeaderBytes = 12;  // {layer, rows, cols} u32
constexpr std::uint64_t kFloatBytes = 4;

struct Message {
  int round = 0;
  int sub_round = 0;  // layer index for exchanges, 0 otherwise
  int sender = kServer;
  int receiver = kServer;
  MessageKind kind = MessageKind::kPublicParams;
  std::uint64_t payload_bytes = 0;
  std::uint64_t header_bytes = 0;
};

class MessageLog {
 public:
  void record(const Message& message) { messages_.push_back(message); }
  const std::vector<Message>& messages() const { return messages_; }
  std::size_t size() const { return messages_.size(); }
  bool empty() const { return messages_.empty(); }
  void clear() { messages_.clear(); }
  bool contains(MessageKind kind) const;

  // Columns: round,sub_round,sender,receiver,kind,payload_bytes,header_bytes.
  // The server is written as -1.
  void write_csv(std::ostream& out) const;
  // Throws ParseError on malformed rows and InvalidArgument on unknown kinds.
  static MessageLog read_csv(std::istream& in);

 private:
  std::vector<Message> messages_;
};

}  // namespace vfgnn

#endif  // VFGNN_MESSAGE_LOG_H_
