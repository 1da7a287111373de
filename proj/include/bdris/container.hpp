#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bdris/tensor.hpp"

namespace bdris {

/// Simple binary container: magic + version, a JSON header, then named fp64
/// matrix sections. Numeric payloads are raw little-endian doubles, so writes
/// and reads round-trip bit-exactly.
///
/// Layout:
///   8 bytes  magic "BDRISBIN"
///   u32      version (1)
///   u64      header length, followed by that many JSON bytes
///   u64      section count
///   repeated: u32 name length, name bytes, u64 rows, u64 cols, rows*cols f64
class Container {
public:
    Container();
    ~Container();
    Container(Container&&) noexcept;
    Container& operator=(Container&&) noexcept;

    nlohmann::json& header();
    const nlohmann::json& header() const;

    void add(const std::string& name, ad::Tensor data);
    bool has(const std::string& name) const;
    const ad::Tensor& get(const std::string& name) const;
    const std::vector<std::pair<std::string, ad::Tensor>>& sections() const { return sections_; }

    void write(const std::string& path) const;
    static Container read(const std::string& path);

private:
    std::unique_ptr<nlohmann::json> header_;
    std::vector<std::pair<std::string, ad::Tensor>> sections_;
};

}  // namespace bdris
