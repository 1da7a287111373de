#include "bdris/container.hpp"

#include <cstring>
#include <fstream>
#include <memory>

#include <nlohmann/json.hpp>

#include "bdris/errors.hpp"

namespace bdris {

namespace {

constexpr char kMagic[8] = {'B', 'D', 'R', 'I', 'S', 'B', 'I', 'N'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("container: truncated file");
    return v;
}

}  // namespace

Container::Container() : header_(std::make_unique<nlohmann::json>(nlohmann::json::object())) {}
Container::~Container() = default;
Container::Container(Container&&) noexcept = default;
Container& Container::operator=(Container&&) noexcept = default;

nlohmann::json& Container::header() { return *header_; }
const nlohmann::json& Container::header() const { return *header_; }

void Container::add(const std::string& name, ad::Tensor data) {
    sections_.emplace_back(name, std::move(data));
}

bool Container::has(const std::string& name) const {
    for (const auto& [n, t] : sections_)
        if (n == name) return true;
    return false;
}

const ad::Tensor& Container::get(const std::string& name) const {
    for (const auto& [n, t] : sections_)
        if (n == name) return t;
    throw IoError("container: missing section '" + name + "'");
}

void Container::write(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("container: cannot open '" + path + "' for writing");
    os.write(kMagic, sizeof(kMagic));
    write_pod(os, kVersion);
    std::string hdr = header_->dump();
    write_pod(os, static_cast<std::uint64_t>(hdr.size()));
    os.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
    write_pod(os, static_cast<std::uint64_t>(sections_.size()));
    for (const auto& [name, t] : sections_) {
        write_pod(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(os, static_cast<std::uint64_t>(t.rows()));
        write_pod(os, static_cast<std::uint64_t>(t.cols()));
        os.write(reinterpret_cast<const char*>(t.data().data()),
                 static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!os) throw IoError("container: write failed for '" + path + "'");
}

Container Container::read(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("container: cannot open '" + path + "'");
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("container: '" + path + "' is not a bdris container");
    }
    auto version = read_pod<std::uint32_t>(is);
    if (version != kVersion) {
        throw IoError("container: unsupported version " + std::to_string(version));
    }
    auto hdr_len = read_pod<std::uint64_t>(is);
    std::string hdr(hdr_len, '\0');
    is.read(hdr.data(), static_cast<std::streamsize>(hdr_len));
    if (!is) throw IoError("container: truncated header");
    Container c;
    try {
        *c.header_ = nlohmann::json::parse(hdr);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("container: malformed header JSON: ") + e.what());
    }
    auto n_sections = read_pod<std::uint64_t>(is);
    for (std::uint64_t s = 0; s < n_sections; ++s) {
        auto name_len = read_pod<std::uint32_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        auto rows = read_pod<std::uint64_t>(is);
        auto cols = read_pod<std::uint64_t>(is);
        std::vector<double> data(rows * cols);
        is.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
        if (!is) throw IoError("container: truncated section '" + name + "'");
        c.add(name, ad::Tensor(rows, cols, std::move(data)));
    }
    return c;
}

}  // namespace bdris
