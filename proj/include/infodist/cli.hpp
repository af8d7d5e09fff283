#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "infodist/alphabet.hpp"
#include "infodist/distances.hpp"
#include "infodist/divergence.hpp"
#include "infodist/errors.hpp"
#include "infodist/estimators.hpp"
#include "infodist/io.hpp"
#include "infodist/markov.hpp"
#include "infodist/phylo.hpp"

namespace infodist {

namespace cli_detail {

inline const char* usage_text() {
    return
        "usage: infodist <command> [options] <inputs>\n"
        "\n"
        "commands:\n"
        "  entropy FILE                 entropy-rate estimate of one input\n"
        "  joint-entropy FX FY          joint entropy rate over paired supersymbols\n"
        "  cond-entropy FX FY           conditional entropy rate of FX given FY\n"
        "                               (--direct side-information coding [default],\n"
        "                                --indirect chain rule, may be negative)\n"
        "  divergence FZ FX             divergence-rate estimate D(Z||X)\n"
        "                               (--method cross-code [default] | zm; --no-clamp)\n"
        "  conjecture-check FX FY       rate of concat vs H(X)+H(Y)+D(Y||X)\n"
        "  distance-matrix FILES...     pairwise distances, PHYLIP square output\n"
        "                               (--metric e1|e2|kl-sym-max|kl-sym-sum,\n"
        "                                --divergence zm|cross-code, --indirect, --jobs N)\n"
        "  tree MATRIXFILE              Newick tree from a PHYLIP matrix\n"
        "                               (--method nj|upgma, --precision P)\n"
        "  gen-markov SPECFILE          sample a Markov source spec (--n N, --seed S)\n"
        "  oracle SPECFILE [SPECFILE2]  exact rates (and divergences for a pair)\n"
        "  experiment                   estimator-vs-oracle sweep, TSV output\n"
        "                               (--spec F, --lengths CSV, --trials T, --jobs N)\n"
        "\n"
        "common options:\n"
        "  --estimator kt|lz78|external (default kt)   --order K (default 0)\n"
        "  --compressor 'CMD {in} {out}' (external estimator)\n"
        "  --mode auto|bytes|text|fasta (default auto)  --alphabet CHARS\n"
        "  --seed S (default 0)         --out FILE      --jobs N (default 1)\n";
}

struct Args {
    std::string command;
    std::vector<std::string> positional;
    std::map<std::string, std::string> options;
    std::set<std::string> switches;

    bool has_switch(const std::string& name) const { return switches.count(name) > 0; }
    std::string option(const std::string& name, const std::string& fallback) const {
        const auto it = options.find(name);
        return it == options.end() ? fallback : it->second;
    }
};

inline const std::set<std::string>& value_options() {
    static const std::set<std::string> opts = {
        "--estimator", "--order",  "--compressor", "--mode",   "--alphabet", "--seed",
        "--out",       "--jobs",   "--method",     "--metric", "--divergence",
        "--precision", "--n",      "--spec",       "--lengths", "--trials"};
    return opts;
}

inline const std::set<std::string>& switch_options() {
    static const std::set<std::string> opts = {"--direct", "--indirect", "--no-clamp"};
    return opts;
}

inline Args parse_args(const std::vector<std::string>& argv) {
    Args a;
    if (argv.empty()) throw Error(errc::usage, "missing command");
    a.command = argv[0];
    for (std::size_t i = 1; i < argv.size(); ++i) {
        const std::string& tok = argv[i];
        if (tok.rfind("--", 0) != 0) {
            a.positional.push_back(tok);
            continue;
        }
        if (switch_options().count(tok)) {
            a.switches.insert(tok);
            continue;
        }
        if (!value_options().count(tok)) throw Error(errc::usage, "unknown option " + tok);
        if (i + 1 >= argv.size()) throw Error(errc::usage, tok + " needs a value");
        a.options[tok] = argv[++i];
    }
    return a;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(errc::usage, "bad " + what + ": " + s);
    }
}

inline std::string fmt6(double v) { return detail::fixed6(v); }

inline EstimatorSpec estimator_from(const Args& a) {
    const std::string kind = a.option("--estimator", "kt");
    const auto order = static_cast<unsigned>(parse_u64(a.option("--order", "0"), "--order"));
    if (kind == "kt") return EstimatorSpec::kt(order);
    if (kind == "lz78") return EstimatorSpec::lz78();
    if (kind == "external") {
        const auto it = a.options.find("--compressor");
        if (it == a.options.end())
            throw Error(errc::usage, "--estimator external needs --compressor");
        return EstimatorSpec::external(ExternalCompressor{it->second});
    }
    throw Error(errc::usage, "unknown estimator " + kind);
}

/// Corpus loading. The default `auto` mode builds the alphabet from the
/// sorted set of byte values observed across the whole corpus, so every
/// item is pairable with every other and small alphabets stay small.
inline std::vector<CorpusItem> load_corpus(const Args& a,
                                           const std::vector<std::string>& paths) {
    const std::string mode = a.option("--mode", "auto");
    const auto alpha_it = a.options.find("--alphabet");
    std::vector<CorpusItem> items;
    if (alpha_it != a.options.end()) {
        if (mode == "fasta")
            throw Error(errc::usage, "--alphabet conflicts with --mode fasta");
        const AlphabetPtr alpha = make_alphabet(std::string_view(alpha_it->second));
        for (const auto& p : paths) items.push_back(ingest_filtered(p, alpha));
    } else if (mode == "fasta") {
        for (const auto& p : paths) items.push_back(ingest_fasta(p));
    } else if (mode == "bytes" || mode == "text") {
        for (const auto& p : paths) items.push_back(ingest_bytes(p));
    } else if (mode == "auto") {
        std::vector<std::string> contents;
        contents.reserve(paths.size());
        bool seen[256] = {};
        for (const auto& p : paths) {
            contents.push_back(read_file(p));
            for (char c : contents.back()) seen[static_cast<std::uint8_t>(c)] = true;
        }
        std::string observed;
        for (int b = 0; b < 256; ++b)
            if (seen[b]) observed += static_cast<char>(b);
        if (observed.size() < 2) {
            // Degenerate corpus (constant or empty); the full byte alphabet
            // keeps the strings representable.
            for (const auto& p : paths) items.push_back(ingest_bytes(p));
        } else {
            const AlphabetPtr alpha = make_alphabet(std::string_view(observed));
            for (std::size_t i = 0; i < paths.size(); ++i) {
                std::vector<std::uint32_t> data(contents[i].size());
                for (std::size_t t = 0; t < contents[i].size(); ++t)
                    data[t] = static_cast<std::uint32_t>(
                        alpha->find(std::string_view(&contents[i][t], 1)));
                IngestReport report;
                report.kept = data.size();
                if (data.empty()) report.warnings.push_back("empty input file");
                items.push_back(CorpusItem{label_from_path(paths[i]), paths[i], "auto",
                                           SymbolString(alpha, std::move(data)),
                                           std::move(report)});
            }
        }
    } else {
        throw Error(errc::usage, "unknown mode " + mode);
    }
    for (std::size_t i = 0; i < items.size(); ++i)
        for (std::size_t j = i + 1; j < items.size(); ++j)
            if (items[i].label == items[j].label)
                throw Error(errc::duplicate_label, "duplicate label: " + items[i].label);
    return items;
}

inline void require_positional(const Args& a, std::size_t count) {
    if (a.positional.size() != count)
        throw Error(errc::usage, a.command + " expects " + std::to_string(count) +
                                     " input path(s), got " +
                                     std::to_string(a.positional.size()));
}

/// Every command accumulates its whole payload first and only then touches
/// the output stream or file, so failures never leave partial output behind.
inline void emit(const Args& a, const std::string& payload, std::ostream& out) {
    const auto it = a.options.find("--out");
    if (it == a.options.end()) {
        out << payload;
        return;
    }
    std::ofstream f(it->second, std::ios::binary);
    if (!f) throw Error(errc::io_failure, "cannot write " + it->second);
    f << payload;
    if (!f) throw Error(errc::io_failure, "write failed on " + it->second);
}

// --- commands --------------------------------------------------------------

inline int cmd_entropy(const Args& a, std::ostream& out, std::ostream&) {
    require_positional(a, 1);
    const auto items = load_corpus(a, a.positional);
    const double rate = entropy_estimate(items[0].sequence, estimator_from(a));
    emit(a, fmt6(rate) + "\n", out);
    return 0;
}

inline int cmd_joint_entropy(const Args& a, std::ostream& out, std::ostream&) {
    require_positional(a, 2);
    const auto items = load_corpus(a, a.positional);
    const double rate = joint_entropy(items[0].sequence, items[1].sequence, estimator_from(a));
    emit(a, fmt6(rate) + "\n", out);
    return 0;
}

inline int cmd_cond_entropy(const Args& a, std::ostream& out, std::ostream&) {
    require_positional(a, 2);
    if (a.has_switch("--direct") && a.has_switch("--indirect"))
        throw Error(errc::usage, "--direct and --indirect are mutually exclusive");
    const auto items = load_corpus(a, a.positional);
    const EstimatorSpec est = estimator_from(a);
    double rate = 0.0;
    if (a.has_switch("--indirect")) {
        rate = conditional_entropy_indirect(items[0].sequence, items[1].sequence, est);
    } else {
        if (est.kind != EstimatorSpec::Kind::kt)
            throw Error(errc::usage, "--direct requires --estimator kt");
        rate = conditional_entropy_direct(items[0].sequence, items[1].sequence, est.order);
    }
    emit(a, fmt6(rate) + "\n", out);
    return 0;
}

inline int cmd_divergence(const Args& a, std::ostream& out, std::ostream& err) {
    require_positional(a, 2);
    const std::string method_name = a.option("--method", "cross-code");
    DivergenceMethod method;
    if (method_name == "zm") {
        method = DivergenceMethod::zm;
    } else if (method_name == "cross-code") {
        method = DivergenceMethod::cross_code;
    } else {
        throw Error(errc::usage, "unknown divergence method " + method_name);
    }
    const auto items = load_corpus(a, a.positional);
    const auto order = static_cast<unsigned>(parse_u64(a.option("--order", "0"), "--order"));
    const DivergenceEstimate d = divergence_estimate(items[0].sequence, items[1].sequence,
                                                     method, order, !a.has_switch("--no-clamp"));
    emit(a, fmt6(d.value) + "\n", out);
    if (d.clamped) err << "note: raw estimate " << fmt6(d.raw) << " clamped to 0\n";
    return 0;
}

inline int cmd_conjecture_check(const Args& a, std::ostream& out, std::ostream&) {
    require_positional(a, 2);
    const auto items = load_corpus(a, a.positional);
    const ConjectureReport r =
        concat_conjecture(items[0].sequence, items[1].sequence, estimator_from(a));
    std::string payload;
    payload += "measured_rate\t" + fmt6(r.measured_rate) + "\n";
    payload += "baseline_rate\t" + fmt6(r.baseline_rate) + "\n";
    payload += "predicted_rate\t" + fmt6(r.predicted_rate) + "\n";
    payload += "excess\t" + fmt6(r.excess) + "\n";
    emit(a, payload, out);
    return 0;
}

inline int cmd_distance_matrix(const Args& a, std::ostream& out, std::ostream& err) {
    if (a.positional.size() < 2)
        throw Error(errc::too_few_items, "distance-matrix needs >= 2 input paths");
    DistanceSpec spec;
    const std::string metric = a.option("--metric", "e2");
    if (metric == "e1") {
        spec.metric = DistanceSpec::Metric::e1;
    } else if (metric == "e2") {
        spec.metric = DistanceSpec::Metric::e2;
    } else if (metric == "kl-sym-max") {
        spec.metric = DistanceSpec::Metric::kl_sym_max;
    } else if (metric == "kl-sym-sum") {
        spec.metric = DistanceSpec::Metric::kl_sym_sum;
    } else {
        throw Error(errc::usage, "unknown metric " + metric);
    }
    spec.estimator = estimator_from(a);
    const std::string div = a.option("--divergence", "cross-code");
    if (div == "zm") {
        spec.divergence = DivergenceMethod::zm;
    } else if (div == "cross-code") {
        spec.divergence = DivergenceMethod::cross_code;
    } else {
        throw Error(errc::usage, "unknown divergence method " + div);
    }
    spec.indirect_conditional = a.has_switch("--indirect");
    const auto jobs = static_cast<unsigned>(parse_u64(a.option("--jobs", "1"), "--jobs"));

    const auto items = load_corpus(a, a.positional);
    std::vector<std::string> labels;
    std::vector<SymbolString> strings;
    labels.reserve(items.size());
    strings.reserve(items.size());
    for (const auto& it : items) {
        labels.push_back(it.label);
        strings.push_back(it.sequence);
    }
    const DistanceMatrix m = distance_matrix(labels, strings, spec, jobs);
    emit(a, write_phylip(m), out);
    if (m.clamp_count > 0)
        err << "note: " << m.clamp_count << " pair(s) clamped to 0\n";
    return 0;
}

inline int cmd_tree(const Args& a, std::ostream& out, std::ostream&) {
    require_positional(a, 1);
    const std::string method = a.option("--method", "nj");
    const auto precision =
        static_cast<int>(parse_u64(a.option("--precision", "6"), "--precision"));
    const DistanceMatrix m = read_phylip(read_file(a.positional[0]));
    PhyloTree t;
    if (method == "nj") {
        t = neighbor_joining(m);
    } else if (method == "upgma") {
        t = upgma(m);
    } else {
        throw Error(errc::usage, "unknown tree method " + method);
    }
    emit(a, to_newick(t, precision) + "\n", out);
    return 0;
}

inline int cmd_gen_markov(const Args& a, std::ostream& out, std::ostream&) {
    require_positional(a, 1);
    const auto it_n = a.options.find("--n");
    if (it_n == a.options.end()) throw Error(errc::usage, "gen-markov needs --n");
    const std::uint64_t n = parse_u64(it_n->second, "--n");
    const std::uint64_t seed = parse_u64(a.option("--seed", "0"), "--seed");
    const MarkovSource src = load_source_spec(a.positional[0]);
    for (const auto& tok : src.alphabet()->tokens())
        if (tok.size() != 1)
            throw Error(errc::invalid_spec,
                        "gen-markov needs single-character tokens, got \"" + tok + "\"");
    const SymbolString s = sample(src, n, seed);
    std::string payload;
    payload.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) payload += src.alphabet()->token(s[i]);
    emit(a, payload, out);
    return 0;
}

inline int cmd_oracle(const Args& a, std::ostream& out, std::ostream&) {
    if (a.positional.size() != 1 && a.positional.size() != 2)
        throw Error(errc::usage, "oracle expects 1 or 2 source-spec paths");
    std::string payload;
    if (a.positional.size() == 1) {
        const MarkovSource src = load_source_spec(a.positional[0]);
        payload += "entropy_rate\t" + fmt6(exact_entropy_rate(src)) + "\n";
    } else {
        const MarkovSource sa = load_source_spec(a.positional[0]);
        const MarkovSource sb = load_source_spec(a.positional[1]);
        payload += "entropy_rate_a\t" + fmt6(exact_entropy_rate(sa)) + "\n";
        payload += "entropy_rate_b\t" + fmt6(exact_entropy_rate(sb)) + "\n";
        const double dab = exact_divergence_rate(sa, sb);
        const double dba = exact_divergence_rate(sb, sa);
        payload += "divergence_a_b\t" +
                   (std::isinf(dab) ? std::string("Infinite") : fmt6(dab)) + "\n";
        payload += "divergence_b_a\t" +
                   (std::isinf(dba) ? std::string("Infinite") : fmt6(dba)) + "\n";
    }
    emit(a, payload, out);
    return 0;
}

inline int cmd_experiment(const Args& a, std::ostream& out, std::ostream&) {
    const auto it_spec = a.options.find("--spec");
    if (it_spec == a.options.end()) throw Error(errc::usage, "experiment needs --spec");
    const MarkovSource src = load_source_spec(it_spec->second);
    const EstimatorSpec est = estimator_from(a);
    if (est.kind == EstimatorSpec::Kind::external)
        throw Error(errc::usage, "experiment supports lz78 and kt only");
    const std::uint64_t seed = parse_u64(a.option("--seed", "0"), "--seed");
    const auto trials = parse_u64(a.option("--trials", "5"), "--trials");
    if (trials == 0) throw Error(errc::usage, "--trials must be >= 1");
    const auto jobs =
        std::max<std::uint64_t>(1, parse_u64(a.option("--jobs", "1"), "--jobs"));

    std::vector<std::uint64_t> lengths;
    {
        const std::string csv = a.option("--lengths", "1000,10000,100000");
        std::size_t start = 0;
        while (start <= csv.size()) {
            const auto comma = csv.find(',', start);
            const std::string field =
                csv.substr(start, comma == std::string::npos ? csv.size() - start
                                                             : comma - start);
            if (field.empty()) throw Error(errc::usage, "bad --lengths value");
            const std::uint64_t n = parse_u64(field, "--lengths");
            if (n < 2) throw Error(errc::usage, "--lengths entries must be >= 2");
            lengths.push_back(n);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }

    const double oracle = exact_entropy_rate(src);
    struct Task {
        std::uint64_t length;
        std::uint64_t trial;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (std::uint64_t n : lengths)
        for (std::uint64_t t = 0; t < trials; ++t) tasks.push_back({n, t, seed + t});

    std::vector<double> estimates(tasks.size(), 0.0);
    std::exception_ptr first_error = nullptr;
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                const SymbolString z = sample(src, tasks[i].length, tasks[i].seed);
                estimates[i] = entropy_estimate(z, est);
            } catch (...) {
                if (!failed.exchange(true)) first_error = std::current_exception();
                return;
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::uint64_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::string payload = "length\ttrial\tseed\testimate\toracle\tabs_error\n";
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        payload += std::to_string(tasks[i].length) + "\t" + std::to_string(tasks[i].trial) +
                   "\t" + std::to_string(tasks[i].seed) + "\t" + fmt6(estimates[i]) + "\t" +
                   fmt6(oracle) + "\t" + fmt6(std::fabs(estimates[i] - oracle)) + "\n";
    }
    emit(a, payload, out);
    return 0;
}

} // namespace cli_detail

/// Entry point shared by the binary and the tests. Returns the process exit
/// status: 0 success, 1 runtime failure, 2 usage error.
inline int run_command(const std::vector<std::string>& argv, std::ostream& out,
                       std::ostream& err) {
    using namespace cli_detail;
    try {
        if (argv.empty()) {
            err << usage_text();
            return 2;
        }
        if (argv[0] == "help" || argv[0] == "--help" || argv[0] == "-h") {
            out << usage_text();
            return 0;
        }
        const Args a = parse_args(argv);
        if (a.command == "entropy") return cmd_entropy(a, out, err);
        if (a.command == "joint-entropy") return cmd_joint_entropy(a, out, err);
        if (a.command == "cond-entropy") return cmd_cond_entropy(a, out, err);
        if (a.command == "divergence") return cmd_divergence(a, out, err);
        if (a.command == "conjecture-check") return cmd_conjecture_check(a, out, err);
        if (a.command == "distance-matrix") return cmd_distance_matrix(a, out, err);
        if (a.command == "tree") return cmd_tree(a, out, err);
        if (a.command == "gen-markov") return cmd_gen_markov(a, out, err);
        if (a.command == "oracle") return cmd_oracle(a, out, err);
        if (a.command == "experiment") return cmd_experiment(a, out, err);
        throw Error(errc::usage, "unknown command " + a.command);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == errc::usage ? 2 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace infodist
