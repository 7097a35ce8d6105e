#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace m3kg {

/// Opaque, totally ordered 64-bit identifier. The tag keeps entity, triplet,
/// media and sample ids from being mixed up.
template <class Tag>
struct Id {
    std::uint64_t value = 0;

    constexpr Id() = default;
    constexpr explicit Id(std::uint64_t v) : value(v) {}

    friend constexpr auto operator<=>(Id, Id) = default;
    friend constexpr bool operator==(Id, Id) = default;
};

struct EntityTag {};
struct TripletTag {};
struct MediaTag {};
struct SampleTag {};

using EntityId = Id<EntityTag>;
using TripletId = Id<TripletTag>;
using MediaId = Id<MediaTag>;
using SampleId = Id<SampleTag>;

enum class Modality : std::uint8_t { Audio = 0, Visual = 1 };

inline const char* to_string(Modality m) { return m == Modality::Audio ? "audio" : "visual"; }

}  // namespace m3kg

template <class Tag>
struct std::hash<m3kg::Id<Tag>> {
    std::size_t operator()(m3kg::Id<Tag> id) const noexcept { return std::hash<std::uint64_t>{}(id.value); }
};
