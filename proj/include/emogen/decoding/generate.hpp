// Copyright 2026 The emogen Authors.
//
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

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "emogen/decoding/beam_search.hpp"
#include "emogen/errors.hpp"
#include "emogen/model/transformer.hpp"
#include "emogen/text/sequence.hpp"
#include "emogen/text/vocab.hpp"

namespace emogen {

inline std::string generate_response(const ModelBundle& model, const Vocab& vocab, std::string_view utterance,
                                     const BeamConfig& config) {
  const TokenSeq src = encode(utterance, vocab, model.config().max_len, SeqRole::kUtterance);
  return decode(beam_search(model, src, config).ids, vocab);
}

/// One detokenized response per utterance, in input order.
inline std::vector<std::string> generate_responses(const ModelBundle& model, const Vocab& vocab,
                                                   const std::vector<std::string>& utterances,
                                                   const BeamConfig& config) {
  config.validate();
  std::vector<std::string> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) out.push_back(generate_response(model, vocab, u, config));
  return out;
}

/// Reads one utterance per line of `input` and writes one response per line
/// to `output`. Returns the number of lines written.
inline std::size_t generate_file(const ModelBundle& model, const Vocab& vocab, const std::filesystem::path& input,
                                 const std::filesystem::path& output, const BeamConfig& config) {
  config.validate();
  std::ifstream is(input);
  if (!is) throw IoError("cannot open " + input.string());
  std::vector<std::string> responses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      responses.push_back(generate_response(model, vocab, line, config));
    } catch (const NumericError& e) {
      throw NumericError(input.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(input.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (is.bad()) throw IoError("read error in " + input.string());
  std::ofstream os(output, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + output.string());
  for (const auto& r : responses) os << r << '\n';
  if (!os) throw IoError("write error in " + output.string());
  return responses.size();
}

}  // namespace emogen
