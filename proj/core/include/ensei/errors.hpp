#pragma once

#include <stdexcept>

namespace ensei {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// modfield
struct OrderNotDividing : Error { using Error::Error; };
struct SearchExhausted : Error { using Error::Error; };

// ntt
struct BadRoot : Error { using Error::Error; };
struct BadGeometry : Error { using Error::Error; };
struct GeometryMismatch : Error { using Error::Error; };

// ringbfv
struct DomainMismatch : Error { using Error::Error; };
struct NoiseExhausted : Error { using Error::Error; };

// hss
struct ChainViolation : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };

// params
struct RangeViolation : Error { using Error::Error; };

// protocol
struct ProtocolOrderViolation : Error { using Error::Error; };
struct RangeOverflow : Error { using Error::Error; };

// wire
struct MalformedPayload : Error { using Error::Error; };
struct TransportError : Error { using Error::Error; };

} // namespace ensei
