#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "infodist/alphabet.hpp"
#include "infodist/distances.hpp"
#include "infodist/errors.hpp"
#include "infodist/markov.hpp"

namespace infodist {

// ---------------------------------------------------------------------------
// Fixed alphabets
// ---------------------------------------------------------------------------

/// One symbol per byte value; every file is representable.
inline const AlphabetPtr& byte_alphabet() {
    static const AlphabetPtr alpha = [] {
        std::vector<std::string> tokens(256);
        for (int b = 0; b < 256; ++b) tokens[b] = std::string(1, static_cast<char>(b));
        return make_alphabet(std::move(tokens));
    }();
    return alpha;
}

inline const AlphabetPtr& dna_alphabet() {
    static const AlphabetPtr alpha = make_alphabet("ACGT");
    return alpha;
}

// ---------------------------------------------------------------------------
// Corpus ingestion
// ---------------------------------------------------------------------------

struct IngestReport {
    std::size_t kept = 0;
    std::size_t dropped = 0;
    std::vector<std::string> warnings;
};

struct CorpusItem {
    std::string label;
    std::string path;
    std::string mode;
    SymbolString sequence;
    IngestReport report;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io_failure, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw Error(errc::io_failure, "read failed on " + path);
    return std::move(buf).str();
}

inline std::string label_from_path(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

/// Raw bytes, one symbol per byte, nothing filtered.
inline CorpusItem ingest_bytes(const std::string& path) {
    const std::string bytes = read_file(path);
    std::vector<std::uint32_t> data(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        data[i] = static_cast<std::uint8_t>(bytes[i]);
    IngestReport report;
    report.kept = data.size();
    if (data.empty()) report.warnings.push_back("empty input file");
    return CorpusItem{label_from_path(path), path, "bytes",
                      SymbolString(byte_alphabet(), std::move(data)), std::move(report)};
}

/// FASTA: headers stripped (the first one names the item), sequence lines
/// concatenated and uppercased, alphabet fixed to ACGT, anything else
/// dropped and counted. ASCII whitespace is formatting, not a symbol.
inline CorpusItem ingest_fasta(const std::string& path) {
    const std::string raw = read_file(path);
    std::string label;
    bool have_label = false;
    std::vector<std::uint32_t> data;
    IngestReport report;
    std::istringstream lines(raw);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line[0] == '>') {
            if (!have_label) {
                label = line.substr(1);
                const auto first = label.find_first_not_of(" \t");
                const auto last = label.find_last_not_of(" \t");
                label = first == std::string::npos ? "" : label.substr(first, last - first + 1);
                have_label = true;
            }
            continue;
        }
        for (char c : line) {
            if (std::isspace(static_cast<unsigned char>(c))) continue;
            const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            const std::int64_t idx = dna_alphabet()->find(std::string_view(&u, 1));
            if (idx < 0) {
                ++report.dropped;
            } else {
                data.push_back(static_cast<std::uint32_t>(idx));
            }
        }
    }
    if (data.empty())
        throw Error(errc::empty_sequence_after_filtering, path + ": no sequence symbols left");
    report.kept = data.size();
    if (!have_label || label.empty()) label = label_from_path(path);
    return CorpusItem{std::move(label), path, "fasta",
                      SymbolString(dna_alphabet(), std::move(data)), std::move(report)};
}

/// Bytes restricted to an explicit alphabet of single-byte tokens;
/// out-of-alphabet bytes are dropped and counted.
inline CorpusItem ingest_filtered(const std::string& path, const AlphabetPtr& alphabet) {
    const std::string bytes = read_file(path);
    std::vector<std::uint32_t> data;
    data.reserve(bytes.size());
    IngestReport report;
    for (char c : bytes) {
        const std::int64_t idx = alphabet->find(std::string_view(&c, 1));
        if (idx < 0) {
            ++report.dropped;
        } else {
            data.push_back(static_cast<std::uint32_t>(idx));
        }
    }
    if (data.empty())
        throw Error(errc::empty_sequence_after_filtering, path + ": no symbols left");
    report.kept = data.size();
    return CorpusItem{label_from_path(path), path, "text",
                      SymbolString(alphabet, std::move(data)), std::move(report)};
}

// ---------------------------------------------------------------------------
// Markov source specification files
// ---------------------------------------------------------------------------
//
//   # comment
//   alphabet: 0 1
//   order: 1
//   state 0: 0.8 0.2
//   state 1: 0.6 0.4
//
// The state tuple lists the last `order` symbols oldest-first; order-0
// sources write a single `state:` line. Every state must appear exactly once.

inline MarkovSource parse_source_spec(const std::string& text) {
    std::istringstream lines(text);
    std::string line;
    AlphabetPtr alphabet;
    int order = -1;
    std::vector<std::pair<std::uint64_t, std::vector<double>>> rows;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        const auto where = [&] { return "source spec line " + std::to_string(line_no); };
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head)) continue;
        if (head == "alphabet:") {
            std::vector<std::string> tokens;
            std::string tok;
            while (ls >> tok) tokens.push_back(tok);
            if (alphabet) throw Error(errc::invalid_spec, where() + ": alphabet repeated");
            alphabet = make_alphabet(std::move(tokens));
        } else if (head == "order:") {
            if (order >= 0) throw Error(errc::invalid_spec, where() + ": order repeated");
            if (!(ls >> order) || order < 0)
                throw Error(errc::invalid_spec, where() + ": bad order");
        } else if (head == "state" || head == "state:") {
            if (!alphabet || order < 0)
                throw Error(errc::invalid_spec,
                            where() + ": alphabet and order must precede state lines");
            std::vector<std::string> fields;
            std::string tok;
            while (ls >> tok) fields.push_back(tok);
            std::vector<std::string> tuple;
            std::size_t split = fields.size();
            if (head == "state") {
                // Tuple tokens run up to the one ending in ':'.
                bool found = false;
                for (std::size_t i = 0; i < fields.size(); ++i) {
                    std::string f = fields[i];
                    const bool colon = !f.empty() && f.back() == ':';
                    if (colon) f.pop_back();
                    if (!f.empty()) tuple.push_back(f);
                    if (colon) {
                        split = i + 1;
                        found = true;
                        break;
                    }
                }
                if (!found) throw Error(errc::invalid_spec, where() + ": missing ':'");
            } else {
                split = 0;
            }
            if (tuple.size() != static_cast<std::size_t>(order))
                throw Error(errc::invalid_spec, where() + ": state tuple needs " +
                                                    std::to_string(order) + " tokens");
            std::uint64_t state = 0;
            for (const auto& t : tuple) {
                const std::int64_t idx = alphabet->find(t);
                if (idx < 0) throw Error(errc::invalid_spec, where() + ": unknown token " + t);
                state = state * alphabet->size() + static_cast<std::uint64_t>(idx);
            }
            std::vector<double> probs;
            for (std::size_t i = split; i < fields.size(); ++i) {
                try {
                    std::size_t used = 0;
                    const double v = std::stod(fields[i], &used);
                    if (used != fields[i].size()) throw std::invalid_argument(fields[i]);
                    probs.push_back(v);
                } catch (const std::exception&) {
                    throw Error(errc::invalid_spec, where() + ": bad probability " + fields[i]);
                }
            }
            if (probs.size() != alphabet->size())
                throw Error(errc::invalid_spec, where() + ": expected " +
                                                    std::to_string(alphabet->size()) +
                                                    " probabilities");
            rows.emplace_back(state, std::move(probs));
        } else {
            throw Error(errc::invalid_spec, where() + ": unknown directive " + head);
        }
    }
    if (!alphabet) throw Error(errc::invalid_spec, "source spec: missing alphabet");
    if (order < 0) throw Error(errc::invalid_spec, "source spec: missing order");
    const std::uint64_t states = detail::checked_pow(
        alphabet->size(), static_cast<unsigned>(order), std::uint64_t(1) << 20, "source spec");
    if (rows.size() != states)
        throw Error(errc::invalid_spec, "source spec: expected " + std::to_string(states) +
                                            " state lines, got " + std::to_string(rows.size()));
    std::vector<double> transition(states * alphabet->size(), -1.0);
    for (auto& [state, probs] : rows) {
        if (transition[state * alphabet->size()] >= 0.0)
            throw Error(errc::invalid_spec, "source spec: state listed twice");
        for (std::size_t a = 0; a < alphabet->size(); ++a)
            transition[state * alphabet->size() + a] = probs[a];
    }
    return MarkovSource(alphabet, static_cast<unsigned>(order), std::move(transition));
}

inline MarkovSource load_source_spec(const std::string& path) {
    return parse_source_spec(read_file(path));
}

// ---------------------------------------------------------------------------
// PHYLIP square distance matrices
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v == 0.0 ? 0.0 : v);
    return buf;
}

} // namespace detail

/// First line: taxa count. Each row: label padded or truncated to 10
/// characters, then the distances at 6 decimals.
inline std::string write_phylip(const DistanceMatrix& m) {
    const std::size_t n = m.size();
    std::vector<std::string> names(n);
    for (std::size_t i = 0; i < n; ++i) {
        names[i] = m.labels[i].substr(0, 10);
        names[i].resize(10, ' ');
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (names[i] == names[j])
                throw Error(errc::duplicate_label,
                            "labels collide after 10-character truncation: " + m.labels[i] +
                                " / " + m.labels[j]);
    std::string out = std::to_string(n) + "\n";
    for (std::size_t i = 0; i < n; ++i) {
        out += names[i];
        for (std::size_t j = 0; j < n; ++j) {
            out += ' ';
            out += detail::fixed6(m.at(i, j));
        }
        out += '\n';
    }
    return out;
}

inline DistanceMatrix read_phylip(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    if (!std::getline(in, line))
        throw Error(errc::invalid_spec, "phylip: empty input");
    try {
        n = std::stoul(line);
    } catch (const std::exception&) {
        throw Error(errc::invalid_spec, "phylip: bad taxa count line");
    }
    if (n < 2) throw Error(errc::too_few_items, "phylip: needs >= 2 taxa");
    DistanceMatrix m;
    m.values.assign(n * n, 0.0);
    m.clamp_flags.assign(n * n, 0);
    m.input_lengths.assign(n, 0);
    m.metric_id = "file";
    m.estimator_id = "file";
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line))
            throw Error(errc::invalid_spec, "phylip: missing row " + std::to_string(i + 1));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.size() < 10) throw Error(errc::invalid_spec, "phylip: short row");
        std::string label = line.substr(0, 10);
        const auto first = label.find_first_not_of(' ');
        const auto last = label.find_last_not_of(' ');
        m.labels.push_back(first == std::string::npos ? ""
                                                      : label.substr(first, last - first + 1));
        std::istringstream vals(line.substr(10));
        for (std::size_t j = 0; j < n; ++j)
            if (!(vals >> m.values[i * n + j]))
                throw Error(errc::invalid_spec, "phylip: row " + std::to_string(i + 1) +
                                                    " has fewer than " + std::to_string(n) +
                                                    " values");
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (m.labels[i] == m.labels[j])
                throw Error(errc::duplicate_label, "phylip: duplicate label " + m.labels[i]);
    return m;
}

} // namespace infodist
