#include "assetgen/mesh_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

#include "assetgen/errors.hpp"
#include "assetgen/image_io.hpp"

namespace assetgen
{
    static_assert(std::endian::native == std::endian::little, "PLY I/O assumes a little-endian host");

    namespace
    {
        std::string lower_extension(const std::filesystem::path& path)
        {
            std::string ext = path.extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            return ext;
        }

        std::vector<std::string_view> split_ws(std::string_view line)
        {
            std::vector<std::string_view> tokens;
            size_t i = 0;
            while (i < line.size())
            {
                while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
                {
                    ++i;
                }
                size_t j = i;
                while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])))
                {
                    ++j;
                }
                if (j > i)
                {
                    tokens.push_back(line.substr(i, j - i));
                }
                i = j;
            }
            return tokens;
        }

        [[noreturn]] void obj_error(const std::filesystem::path& path, size_t line, const std::string& what)
        {
            std::ostringstream os;
            os << path.string() << ":" << line << ": " << what;
            throw DataError(os.str());
        }

        double parse_double(std::string_view token, const std::filesystem::path& path, size_t line)
        {
            // std::from_chars for double is not available on every libstdc++ we target.
            std::string copy(token);
            char* end = nullptr;
            const double value = std::strtod(copy.c_str(), &end);
            if (end != copy.c_str() + copy.size())
            {
                obj_error(path, line, "invalid number '" + copy + "'");
            }
            return value;
        }

        TriangleMesh load_obj(const std::filesystem::path& path)
        {
            std::ifstream in(path);
            if (!in)
            {
                throw DataError("cannot open mesh file: " + path.string());
            }
            TriangleMesh mesh;
            std::vector<Vec3> colors;
            bool any_color = false;
            std::string line;
            size_t line_no = 0;
            while (std::getline(in, line))
            {
                ++line_no;
                const auto hash = line.find('#');
                const auto tokens = split_ws(std::string_view(line).substr(0, hash));
                if (tokens.empty())
                {
                    continue;
                }
                if (tokens[0] == "v")
                {
                    if (tokens.size() != 4 && tokens.size() != 7 && tokens.size() != 5)
                    {
                        obj_error(path, line_no, "vertex record needs 3 coordinates (optionally w or r g b)");
                    }
                    mesh.vertices.emplace_back(parse_double(tokens[1], path, line_no), parse_double(tokens[2], path, line_no),
                        parse_double(tokens[3], path, line_no));
                    if (tokens.size() == 7)
                    {
                        Vec3 c;
                        for (int k = 0; k < 3; ++k)
                        {
                            c[k] = srgb_to_linear(std::clamp(parse_double(tokens[4 + k], path, line_no), 0.0, 1.0));
                        }
                        colors.push_back(c);
                        any_color = true;
                    }
                    else
                    {
                        colors.push_back(Vec3::Zero());
                    }
                }
                else if (tokens[0] == "f")
                {
                    std::vector<int> poly;
                    for (size_t t = 1; t < tokens.size(); ++t)
                    {
                        const std::string_view ref = tokens[t].substr(0, tokens[t].find('/'));
                        int idx = 0;
                        const auto [ptr, ec] = std::from_chars(ref.data(), ref.data() + ref.size(), idx);
                        if (ec != std::errc() || ptr != ref.data() + ref.size() || idx == 0)
                        {
                            obj_error(path, line_no, "invalid face index '" + std::string(tokens[t]) + "'");
                        }
                        const int resolved = idx > 0 ? idx - 1 : static_cast<int>(mesh.vertices.size()) + idx;
                        if (resolved < 0 || resolved >= static_cast<int>(mesh.vertices.size()))
                        {
                            obj_error(path, line_no, "face index " + std::to_string(idx) + " out of range");
                        }
                        poly.push_back(resolved);
                    }
                    if (poly.size() < 3)
                    {
                        obj_error(path, line_no, "face with fewer than 3 vertices");
                    }
                    for (size_t k = 1; k + 1 < poly.size(); ++k)
                    {
                        mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
                    }
                }
            }
            if (any_color)
            {
                mesh.colors = std::move(colors);
            }
            return mesh;
        }

        enum class PlyType
        {
            Int8,
            UInt8,
            Int16,
            UInt16,
            Int32,
            UInt32,
            Float32,
            Float64,
        };

        size_t ply_size(PlyType t)
        {
            switch (t)
            {
            case PlyType::Int8:
            case PlyType::UInt8:
                return 1;
            case PlyType::Int16:
            case PlyType::UInt16:
                return 2;
            case PlyType::Int32:
            case PlyType::UInt32:
            case PlyType::Float32:
                return 4;
            case PlyType::Float64:
                return 8;
            }
            return 0;
        }

        bool parse_ply_type(std::string_view name, PlyType& out)
        {
            static const std::pair<std::string_view, PlyType> table[] = {
                {"char", PlyType::Int8}, {"int8", PlyType::Int8}, {"uchar", PlyType::UInt8}, {"uint8", PlyType::UInt8},
                {"short", PlyType::Int16}, {"int16", PlyType::Int16}, {"ushort", PlyType::UInt16}, {"uint16", PlyType::UInt16},
                {"int", PlyType::Int32}, {"int32", PlyType::Int32}, {"uint", PlyType::UInt32}, {"uint32", PlyType::UInt32},
                {"float", PlyType::Float32}, {"float32", PlyType::Float32}, {"double", PlyType::Float64}, {"float64", PlyType::Float64},
            };
            for (const auto& [n, t] : table)
            {
                if (n == name)
                {
                    out = t;
                    return true;
                }
            }
            return false;
        }

        struct PlyProperty
        {
            std::string name;
            PlyType type = PlyType::Float32;
            bool is_list = false;
            PlyType count_type = PlyType::UInt8;
        };

        struct PlyElement
        {
            std::string name;
            size_t count = 0;
            std::vector<PlyProperty> properties;
        };

        class ByteReader
        {
        public:
            ByteReader(const std::vector<char>& data, size_t offset, const std::filesystem::path& path)
                : data_(data), offset_(offset), path_(path)
            {
            }

            double read(PlyType t)
            {
                const size_t n = ply_size(t);
                if (offset_ + n > data_.size())
                {
                    std::ostringstream os;
                    os << path_.string() << ": unexpected end of PLY data at byte " << offset_;
                    throw DataError(os.str());
                }
                const char* p = data_.data() + offset_;
                offset_ += n;
                switch (t)
                {
                case PlyType::Int8:
                    return load<int8_t>(p);
                case PlyType::UInt8:
                    return load<uint8_t>(p);
                case PlyType::Int16:
                    return load<int16_t>(p);
                case PlyType::UInt16:
                    return load<uint16_t>(p);
                case PlyType::Int32:
                    return load<int32_t>(p);
                case PlyType::UInt32:
                    return load<uint32_t>(p);
                case PlyType::Float32:
                    return load<float>(p);
                case PlyType::Float64:
                    return load<double>(p);
                }
                return 0.0;
            }

            size_t offset() const { return offset_; }

        private:
            template <typename T>
            static double load(const char* p)
            {
                T v;
                std::memcpy(&v, p, sizeof(T));
                return static_cast<double>(v);
            }

            const std::vector<char>& data_;
            size_t offset_;
            const std::filesystem::path& path_;
        };

        TriangleMesh load_ply(const std::filesystem::path& path)
        {
            std::ifstream in(path, std::ios::binary);
            if (!in)
            {
                throw DataError("cannot open mesh file: " + path.string());
            }
            std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

            auto fail = [&](size_t offset, const std::string& what) {
                std::ostringstream os;
                os << path.string() << ": byte " << offset << ": " << what;
                throw DataError(os.str());
            };

            // Header.
            std::vector<PlyElement> elements;
            size_t pos = 0;
            bool saw_magic = false;
            bool saw_format = false;
            for (;;)
            {
                const size_t line_start = pos;
                const auto nl = std::find(data.begin() + static_cast<std::ptrdiff_t>(pos), data.end(), '\n');
                if (nl == data.end())
                {
                    fail(line_start, "unterminated PLY header");
                }
                std::string line(data.begin() + static_cast<std::ptrdiff_t>(pos), nl);
                pos = static_cast<size_t>(nl - data.begin()) + 1;
                if (!line.empty() && line.back() == '\r')
                {
                    line.pop_back();
                }
                const auto tokens = split_ws(line);
                if (!saw_magic)
                {
                    if (line != "ply")
                    {
                        fail(line_start, "missing 'ply' magic");
                    }
                    saw_magic = true;
                    continue;
                }
                if (tokens.empty() || tokens[0] == "comment" || tokens[0] == "obj_info")
                {
                    continue;
                }
                if (tokens[0] == "format")
                {
                    if (tokens.size() < 2 || tokens[1] != "binary_little_endian")
                    {
                        fail(line_start, "only binary_little_endian PLY is supported");
                    }
                    saw_format = true;
                }
                else if (tokens[0] == "element")
                {
                    if (tokens.size() != 3)
                    {
                        fail(line_start, "malformed element line");
                    }
                    PlyElement e;
                    e.name = std::string(tokens[1]);
                    e.count = std::stoull(std::string(tokens[2]));
                    elements.push_back(std::move(e));
                }
                else if (tokens[0] == "property")
                {
                    if (elements.empty())
                    {
                        fail(line_start, "property before any element");
                    }
                    PlyProperty p;
                    if (tokens.size() == 5 && tokens[1] == "list")
                    {
                        p.is_list = true;
                        if (!parse_ply_type(tokens[2], p.count_type) || !parse_ply_type(tokens[3], p.type))
                        {
                            fail(line_start, "unknown list property type");
                        }
                        p.name = std::string(tokens[4]);
                    }
                    else if (tokens.size() == 3)
                    {
                        if (!parse_ply_type(tokens[1], p.type))
                        {
                            fail(line_start, "unknown property type '" + std::string(tokens[1]) + "'");
                        }
                        p.name = std::string(tokens[2]);
                    }
                    else
                    {
                        fail(line_start, "malformed property line");
                    }
                    elements.back().properties.push_back(std::move(p));
                }
                else if (tokens[0] == "end_header")
                {
                    break;
                }
                else
                {
                    fail(line_start, "unknown header keyword '" + std::string(tokens[0]) + "'");
                }
            }
            if (!saw_format)
            {
                fail(0, "missing format line");
            }

            TriangleMesh mesh;
            bool has_color = false;
            ByteReader reader(data, pos, path);
            for (const PlyElement& element : elements)
            {
                if (element.name == "vertex")
                {
                    mesh.vertices.resize(element.count, Vec3::Zero());
                    for (const auto& p : element.properties)
                    {
                        has_color = has_color || p.name == "red";
                    }
                    if (has_color)
                    {
                        mesh.colors.resize(element.count, Vec3::Zero());
                    }
                    for (size_t i = 0; i < element.count; ++i)
                    {
                        for (const PlyProperty& p : element.properties)
                        {
                            if (p.is_list)
                            {
                                const auto n = static_cast<size_t>(reader.read(p.count_type));
                                for (size_t k = 0; k < n; ++k)
                                {
                                    reader.read(p.type);
                                }
                                continue;
                            }
                            const double value = reader.read(p.type);
                            if (p.name == "x")
                            {
                                mesh.vertices[i].x() = value;
                            }
                            else if (p.name == "y")
                            {
                                mesh.vertices[i].y() = value;
                            }
                            else if (p.name == "z")
                            {
                                mesh.vertices[i].z() = value;
                            }
                            else if (p.name == "red" || p.name == "green" || p.name == "blue")
                            {
                                const int channel = p.name == "red" ? 0 : (p.name == "green" ? 1 : 2);
                                const double unit = p.type == PlyType::Float32 || p.type == PlyType::Float64 ? value : value / 255.0;
                                mesh.colors[i][channel] = srgb_to_linear(std::clamp(unit, 0.0, 1.0));
                            }
                        }
                    }
                }
                else if (element.name == "face")
                {
                    for (size_t i = 0; i < element.count; ++i)
                    {
                        for (const PlyProperty& p : element.properties)
                        {
                            if (!p.is_list)
                            {
                                reader.read(p.type);
                                continue;
                            }
                            const size_t at = reader.offset();
                            const auto n = static_cast<size_t>(reader.read(p.count_type));
                            std::vector<int> poly(n);
                            for (size_t k = 0; k < n; ++k)
                            {
                                poly[k] = static_cast<int>(reader.read(p.type));
                            }
                            if (p.name != "vertex_indices" && p.name != "vertex_index")
                            {
                                continue;
                            }
                            if (n < 3)
                            {
                                fail(at, "face with fewer than 3 vertices");
                            }
                            for (int idx : poly)
                            {
                                if (idx < 0 || static_cast<size_t>(idx) >= mesh.vertices.size())
                                {
                                    fail(at, "face index " + std::to_string(idx) + " out of range");
                                }
                            }
                            for (size_t k = 1; k + 1 < n; ++k)
                            {
                                mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
                            }
                        }
                    }
                }
                else
                {
                    for (size_t i = 0; i < element.count; ++i)
                    {
                        for (const PlyProperty& p : element.properties)
                        {
                            const size_t n = p.is_list ? static_cast<size_t>(reader.read(p.count_type)) : 1;
                            for (size_t k = 0; k < n; ++k)
                            {
                                reader.read(p.type);
                            }
                        }
                    }
                }
            }
            return mesh;
        }

        void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path)
        {
            std::ofstream out(path);
            if (!out)
            {
                throw DataError("cannot write mesh file: " + path.string());
            }
            out << std::setprecision(17);
            const bool colors = mesh.has_colors();
            for (size_t i = 0; i < mesh.vertices.size(); ++i)
            {
                const Vec3& v = mesh.vertices[i];
                out << "v " << v.x() << ' ' << v.y() << ' ' << v.z();
                if (colors)
                {
                    const Vec3& c = mesh.colors[i];
                    out << ' ' << linear_to_srgb(c.x()) << ' ' << linear_to_srgb(c.y()) << ' ' << linear_to_srgb(c.z());
                }
                out << '\n';
            }
            for (const Face& f : mesh.faces)
            {
                out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
            }
            if (!out)
            {
                throw DataError("failed writing mesh file: " + path.string());
            }
        }

        template <typename T>
        void put(std::ostream& out, T value)
        {
            out.write(reinterpret_cast<const char*>(&value), sizeof(T));
        }

        void save_ply(const TriangleMesh& mesh, const std::filesystem::path& path, const SaveOptions& options)
        {
            std::ofstream out(path, std::ios::binary);
            if (!out)
            {
                throw DataError("cannot write mesh file: " + path.string());
            }
            const bool colors = mesh.has_colors();
            const bool view_ids = options.vertex_view_ids != nullptr && options.vertex_view_ids->size() == mesh.vertices.size();
            out << "ply\nformat binary_little_endian 1.0\n";
            out << "element vertex " << mesh.vertices.size() << "\n";
            out << "property float x\nproperty float y\nproperty float z\n";
            if (colors)
            {
                out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
            }
            if (view_ids)
            {
                out << "property int view_id\n";
            }
            out << "element face " << mesh.faces.size() << "\n";
            out << "property list uchar int vertex_indices\nend_header\n";
            for (size_t i = 0; i < mesh.vertices.size(); ++i)
            {
                for (int k = 0; k < 3; ++k)
                {
                    put<float>(out, static_cast<float>(mesh.vertices[i][k]));
                }
                if (colors)
                {
                    for (int k = 0; k < 3; ++k)
                    {
                        put<uint8_t>(out, encode_srgb8(mesh.colors[i][k]));
                    }
                }
                if (view_ids)
                {
                    put<int32_t>(out, (*options.vertex_view_ids)[i]);
                }
            }
            for (const Face& f : mesh.faces)
            {
                put<uint8_t>(out, 3);
                for (int idx : f)
                {
                    put<int32_t>(out, idx);
                }
            }
            if (!out)
            {
                throw DataError("failed writing mesh file: " + path.string());
            }
        }
    } // namespace

    TriangleMesh load_mesh(const std::filesystem::path& path)
    {
        if (!std::filesystem::exists(path))
        {
            throw DataError("mesh file not found: " + path.string());
        }
        const std::string ext = lower_extension(path);
        TriangleMesh mesh;
        if (ext == ".obj")
        {
            mesh = load_obj(path);
        }
        else if (ext == ".ply")
        {
            mesh = load_ply(path);
        }
        else
        {
            throw DataError("unsupported mesh format '" + ext + "': " + path.string());
        }
        check_indices(mesh);
        return mesh;
    }

    void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path, const SaveOptions& options)
    {
        check_indices(mesh);
        const std::string ext = lower_extension(path);
        if (ext == ".obj")
        {
            save_obj(mesh, path);
        }
        else if (ext == ".ply")
        {
            save_ply(mesh, path, options);
        }
        else
        {
            throw DataError("unsupported mesh format '" + ext + "': " + path.string());
        }
    }
} // namespace assetgen
