#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "graphnav/common.hpp"

namespace graphnav {

// Token <-> id bijection with two reserved ids. Non-reserved ids are assigned
// in insertion order, which equals file line order after a round-trip.
class Vocabulary {
  public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    Vocabulary() = default;

    int add(const std::string& token) {
        require(!token.empty(), "vocab: empty token");
        auto it = by_token_.find(token);
        if (it != by_token_.end()) return it->second;
        const int id = static_cast<int>(tokens_.size()) + 2;
        tokens_.push_back(token);
        by_token_.emplace(token, id);
        return id;
    }

    int id(const std::string& token) const {
        auto it = by_token_.find(token);
        return it == by_token_.end() ? kUnk : it->second;
    }

    const std::string& token(int id) const {
        static const std::string pad = "<pad>", unk = "<unk>";
        if (id == kPad) return pad;
        if (id == kUnk) return unk;
        require(id >= 2 && id < size(), "vocab: id " + std::to_string(id) + " out of range");
        return tokens_[static_cast<size_t>(id - 2)];
    }

    int size() const { return static_cast<int>(tokens_.size()) + 2; }

    void save(const std::string& path) const {
        std::ofstream os(path, std::ios::trunc);
        require(bool(os), "vocab: cannot write '" + path + "'");
        for (const auto& t : tokens_) os << t << '\n';
        require(bool(os), "vocab: write failed for '" + path + "'");
    }

    static Vocabulary load(const std::string& path) {
        std::ifstream is(path);
        require(bool(is), "vocab: cannot open '" + path + "'");
        Vocabulary v;
        std::string line;
        while (std::getline(is, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) v.add(line);
        }
        return v;
    }

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> by_token_;
};

// Whitespace tokenizer; unknown words map to UNK.
inline std::vector<int> tokenize(const Vocabulary& vocab, const std::string& text) {
    std::vector<int> ids;
    std::istringstream ss(text);
    std::string word;
    while (ss >> word) ids.push_back(vocab.id(word));
    return ids;
}

}  // namespace graphnav
