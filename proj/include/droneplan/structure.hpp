#pragma once

// Coalitions and coalition structures over the scenario's shipper indices.
//
// A coalition is a bitmask over shipper indices (the scenario's sorted shipper
// order). Structures are kept in a canonical block order: larger blocks first,
// then lexicographic by member indices. Enumeration order groups structures by
// descending block count, then by block sizes (more even first), then by
// blocks. For four shippers this is the familiar Phi_1 (all alone) ... Phi_15
// (grand coalition) listing, with Phi_8 = p1,p2|p3,p4.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace droneplan {

struct Coalition {
  std::uint64_t mask = 0;

  static Coalition single(std::size_t shipper) { return Coalition{std::uint64_t{1} << shipper}; }
  static Coalition all(std::size_t n);

  bool empty() const { return mask == 0; }
  std::size_t size() const;
  bool contains(std::size_t shipper) const { return (mask >> shipper) & 1U; }
  std::vector<std::size_t> members() const;

  Coalition with(std::size_t shipper) const { return Coalition{mask | (std::uint64_t{1} << shipper)}; }
  Coalition without(std::size_t shipper) const {
    return Coalition{mask & ~(std::uint64_t{1} << shipper)};
  }

  friend bool operator==(Coalition, Coalition) = default;
};

/// Canonical comparison: larger coalitions first, then by sorted member list.
bool canonical_less(Coalition a, Coalition b);

struct CoalitionStructure {
  std::vector<Coalition> blocks;  // canonical order

  static CoalitionStructure from_blocks(std::vector<Coalition> blocks);
  static CoalitionStructure singletons(std::size_t n);

  /// Block containing `shipper`; throws std::out_of_range if absent.
  Coalition block_of(std::size_t shipper) const;

  friend bool operator==(const CoalitionStructure&, const CoalitionStructure&) = default;
};

/// Ordering used for enumeration and reporting.
bool structure_less(const CoalitionStructure& a, const CoalitionStructure& b);

/// True when blocks are nonempty, pairwise disjoint and cover shippers 0..n-1.
bool is_partition(const CoalitionStructure& s, std::size_t n);

std::uint64_t bell_number(std::size_t n);

/// All partitions of n shippers in reporting order.
std::vector<CoalitionStructure> enumerate_structures(std::size_t n);

/// Every structure reachable by moving one shipper into another block or out
/// on its own; the input itself is excluded. Sorted in reporting order.
std::vector<CoalitionStructure> neighbors(const CoalitionStructure& s, std::size_t n);

/// Shippers whose block differs between the two structures.
Coalition changed_shippers(const CoalitionStructure& from, const CoalitionStructure& to,
                           std::size_t n);

/// Shippers whose single move turns `from` into `to` (one or two candidates for
/// neighbors, empty otherwise).
std::vector<std::size_t> movers(const CoalitionStructure& from, const CoalitionStructure& to,
                                std::size_t n);

// Textual grammar: shippers separated by ',', coalitions by '|', e.g. "p1,p2|p3,p4".
std::string format_coalition(Coalition c, const std::vector<std::string>& ids);
std::string format_structure(const CoalitionStructure& s, const std::vector<std::string>& ids);

/// Throws std::invalid_argument ("unknown shipper ...", duplicates, empty blocks).
Coalition parse_coalition(std::string_view text, const std::vector<std::string>& ids);
CoalitionStructure parse_structure(std::string_view text, const std::vector<std::string>& ids);

}  // namespace droneplan
