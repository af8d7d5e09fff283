#pragma once

#include <stdexcept>
#include <string>

namespace infodist {

/// Error categories surfaced by the library. Each maps to one failure mode
/// named in the operation contracts.
enum class errc {
    duplicate_symbol,
    too_small,
    unknown_symbol,
    length_mismatch,
    alphabet_mismatch,
    not_irreducible,
    marginal_not_markov,
    order_mismatch,
    input_too_short,
    adapter_failure,
    alphabet_too_large,
    empty_reference,
    degenerate_denominator,
    too_few_items,
    asymmetric_matrix,
    io_failure,
    empty_sequence_after_filtering,
    duplicate_label,
    invalid_spec,
    usage,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::duplicate_symbol: return "DuplicateSymbol";
        case errc::too_small: return "TooSmall";
        case errc::unknown_symbol: return "UnknownSymbol";
        case errc::length_mismatch: return "LengthMismatch";
        case errc::alphabet_mismatch: return "AlphabetMismatch";
        case errc::not_irreducible: return "NotIrreducible";
        case errc::marginal_not_markov: return "MarginalNotMarkov";
        case errc::order_mismatch: return "OrderMismatch";
        case errc::input_too_short: return "InputTooShort";
        case errc::adapter_failure: return "AdapterFailure";
        case errc::alphabet_too_large: return "AlphabetTooLarge";
        case errc::empty_reference: return "EmptyReference";
        case errc::degenerate_denominator: return "DegenerateDenominator";
        case errc::too_few_items: return "TooFewItems";
        case errc::asymmetric_matrix: return "AsymmetricMatrix";
        case errc::io_failure: return "IoFailure";
        case errc::empty_sequence_after_filtering: return "EmptySequenceAfterFiltering";
        case errc::duplicate_label: return "DuplicateLabel";
        case errc::invalid_spec: return "InvalidSpec";
        case errc::usage: return "Usage";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
  public:
    Error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

  private:
    errc code_;
};

} // namespace infodist
