#pragma once

#include <stdexcept>
#include <string>

namespace gapforge {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// corpus / marker text
struct UnbalancedMarkers : Error { using Error::Error; };
struct NestedMarkers : Error { using Error::Error; };
struct EmptyGap : Error { using Error::Error; };
struct SchemaViolation : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };

// spans / model
struct SpanOutOfBounds : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct SequenceTooLong : Error { using Error::Error; };

// training
struct TooFewSentences : Error { using Error::Error; };
struct SameDocument : Error { using Error::Error; };
struct EmptyCorpus : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };
struct NoAnnotatedDev : Error { using Error::Error; };

// evaluation
struct SingleSentence : Error { using Error::Error; };
struct MissingTense : Error { using Error::Error; };
struct CheckpointMismatch : Error { using Error::Error; };

}  // namespace gapforge
