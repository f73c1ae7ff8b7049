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


#include "vfgnn/message_log.h"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "vfgnn/common.h"

namespace vfgnn {
namespace {

constexpr std::pair<MessageKind, std::string_view> kKindNames[] = {
    {MessageKind::kPublicParams, "public_params"},
    {MessageKind::kProjectionSeed, "projection_seed"},
    {MessageKind::kAggregate, "aggregate"},
    {MessageKind::kIndividualEmbedding, "individual_embedding"},
    {MessageKind::kGradientTernary, "gradient_ternary"},
    {MessageKind::kGradientDense, "gradient_dense"},
};

}  // namespace

std::string_view message_kind_name(MessageKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

MessageKind parse_message_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw InvalidArgument("unknown message kind '" + std::string(name) + "'");
}

Phase phase_of(MessageKind kind) {
  switch (kind) {
    case MessageKind::kPublicParams:
    case MessageKind::kProjectionSeed:
      return Phase::kDownload;
    case MessageKind::kAggregate:
    case MessageKind::kIndividualEmbedding:
      return Phase::kExchange;
    case MessageKind::kGradientTernary:
    case MessageKind::kGradientDense:
      return Phase::kUpload;
  }
  return Phase::kDownload;
}

bool MessageLog::contains(MessageKind kind) const {
  return std::any_of(messages_.begin(), messages_.end(),
                     [kind](const Message& m) { return m.kind == kind; });
}

void MessageLog::write_csv(std::ostream& out) const {
  out << "round,sub_round,sender,receiver,kind,payload_bytes,header_bytes\n";
  for (const auto& m : messages_) {
    out << m.round << ',' << m.sub_round << ',' << m.sender << ','
        << m.receiver << ',' << message_kind_name(m.kind) << ','
        << m.payload_bytes << ',' << m.header_bytes << '\n';
  }
}

MessageLog MessageLog::read_csv(std::istream& in) {
  MessageLog log;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("round,", 0) == 0) continue;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 7) {
      throw ParseError("message log line " + std::to_string(line_no) +
                       ": expected 7 fields");
    }
    Message m;
    try {
      m.round = std::stoi(fields[0]);
      m.sub_round = std::stoi(fields[1]);
      m.sender = std::stoi(fields[2]);
      m.receiver = std::stoi(fields[3]);
      m.payload_bytes = std::stoull(fields[5]);
      m.header_bytes = std::stoull(fields[6]);
    } catch (const std::logic_error&) {
      throw ParseError("message log line " + std::to_string(line_no) +
                       ": bad number");
    }
    m.kind = parse_message_kind(fields[4]);
    log.record(m);
  }
  return log;
}

}  // namespace vfgnn
