// SPDX-License-Identifier: Apache-2.0
//
// `fileio`: a flat store of absolute paths with per-file write permission.
//
//   read_file(path)            -> {"content": text}
//   write_file(path, content)  -> {"status": "ok", "bytes": n}     (creates or overwrites)
//   create_file(path, content) -> {"status": "ok", "bytes": n}     (fails if present)
//   delete_file(path)          -> {"status": "ok"}
//   move_file(src, dst)        -> {"status": "ok"}
//   list_files(prefix)         -> {"files": [...]}                 (sorted)
//
// Paths must be absolute, without empty, "." or ".." segments and without a
// trailing slash ("bad path: ..."). Read-only files reject writes, deletes and
// moves ("permission denied: ...").
#include <atris/environment.hpp>

#include <sstream>

namespace atris
{

namespace
{

auto fileioTools() -> const std::vector<ToolSpec>&
{
    static const auto tools = std::vector<ToolSpec> {
        {"read_file", "Return the content of a file.", {{"path", "string", true, "Absolute file path."}}},
        {"write_file",
         "Write content to a file, creating it or overwriting it.",
         {{"path", "string", true, "Absolute file path."}, {"content", "string", true, "New content."}}},
        {"create_file",
         "Create a new file. Fails when the file already exists.",
         {{"path", "string", true, "Absolute file path."}, {"content", "string", true, "Initial content."}}},
        {"delete_file", "Delete a file.", {{"path", "string", true, "Absolute file path."}}},
        {"move_file",
         "Rename a file. Fails when the destination exists.",
         {{"src", "string", true, "Existing path."}, {"dst", "string", true, "New path."}}},
        {"list_files", "List file paths starting with a prefix.", {{"prefix", "string", true, "Path prefix."}}},
    };
    return tools;
}

auto validPath(std::string_view path) -> bool
{
    if (path.size() < 2 || path.front() != '/' || path.back() == '/')
        return false;
    auto segments = std::istringstream(std::string(path.substr(1)));
    auto segment = std::string {};
    while (std::getline(segments, segment, '/'))
    {
        if (segment.empty() || segment == "." || segment == "..")
            return false;
        for (unsigned char c: segment)
        {
            if (c < 0x20 || c == 0x7f)
                return false;
        }
    }
    return true;
}

class FileStore final : public Environment
{
  public:
    explicit FileStore(Value initial): Environment(std::move(initial)) {}

    [[nodiscard]] auto id() const -> std::string_view override { return "fileio"; }
    [[nodiscard]] auto tools() const -> const std::vector<ToolSpec>& override { return fileioTools(); }

    [[nodiscard]] auto failure_labels() const -> std::vector<std::string> override
    {
        return {"not_found", "permission_denied", "already_exists", "bad_path", std::string(unknown_tool_label),
                std::string(bad_argument_label)};
    }

    [[nodiscard]] auto implementation_notes(std::string_view tool) const -> std::string override
    {
        auto const paths = std::string(
            "Every path must be absolute, must not end with '/', and must not contain empty, '.' or '..' segments; "
            "otherwise the call fails with \"bad path: <path>\".");
        if (tool == "read_file")
            return "read_file(path): fails with \"no such file: <path>\" when absent. " + paths;
        if (tool == "write_file")
            return "write_file(path, content): overwrites or creates; fails with \"permission denied: <path>\" "
                   "when the existing file is read-only. "
                   + paths;
        if (tool == "create_file")
            return "create_file(path, content): fails with \"file exists: <path>\" when present. " + paths;
        if (tool == "delete_file")
            return "delete_file(path): fails with \"no such file: <path>\" when absent and "
                   "\"permission denied: <path>\" when read-only. "
                   + paths;
        if (tool == "move_file")
            return "move_file(src, dst): fails with \"no such file\" for a missing src, \"permission denied\" for a "
                   "read-only src and \"file exists\" when dst is taken. "
                   + paths;
        if (tool == "list_files")
            return "list_files(prefix): returns matching paths in sorted order; prefix must start with '/' or the "
                   "call fails with \"bad path: <prefix>\".";
        return "no such tool; calling it fails with \"unknown tool <name>\".";
    }

    [[nodiscard]] auto clone() const -> std::unique_ptr<Environment> override
    {
        return std::make_unique<FileStore>(*this);
    }

  protected:
    auto apply(const ToolCall& call, Value& state) const -> Applied override
    {
        auto& files = state["files"];
        auto path = [&](const char* arg) -> std::string {
            auto p = call.arg(arg)->get<std::string>();
            if (!validPath(p))
                throw ToolFailure {"bad_path", "bad path: " + p};
            return p;
        };
        auto existing = [&](const std::string& p) -> Value& {
            if (!files.contains(p))
                throw ToolFailure {"not_found", "no such file: " + p};
            return files[p];
        };
        auto writable = [&](const std::string& p, const Value& file) {
            if (!file.value("writable", true))
                throw ToolFailure {"permission_denied", "permission denied: " + p};
        };
        auto bytes = [](const Value& content) { return static_cast<std::int64_t>(content.get<std::string>().size()); };

        if (call.tool == "read_file")
        {
            auto const p = path("path");
            return {Value {{"content", existing(p)["content"]}}, false};
        }

        if (call.tool == "write_file")
        {
            auto const p = path("path");
            auto const& content = *call.arg("content");
            if (files.contains(p))
            {
                writable(p, files[p]);
                files[p]["content"] = content;
            }
            else
            {
                files[p] = Value {{"content", content}, {"writable", true}};
            }
            return {Value {{"status", "ok"}, {"bytes", bytes(content)}}, true};
        }

        if (call.tool == "create_file")
        {
            auto const p = path("path");
            if (files.contains(p))
                throw ToolFailure {"already_exists", "file exists: " + p};
            auto const& content = *call.arg("content");
            files[p] = Value {{"content", content}, {"writable", true}};
            return {Value {{"status", "ok"}, {"bytes", bytes(content)}}, true};
        }

        if (call.tool == "delete_file")
        {
            auto const p = path("path");
            writable(p, existing(p));
            files.erase(p);
            return {Value {{"status", "ok"}}, true};
        }

        if (call.tool == "move_file")
        {
            auto const src = path("src");
            auto const dst = path("dst");
            auto file = existing(src);
            writable(src, file);
            if (files.contains(dst))
                throw ToolFailure {"already_exists", "file exists: " + dst};
            files.erase(src);
            files[dst] = std::move(file);
            return {Value {{"status", "ok"}}, true};
        }

        if (call.tool == "list_files")
        {
            auto const prefix = call.arg("prefix")->get<std::string>();
            if (prefix.empty() || prefix.front() != '/')
                throw ToolFailure {"bad_path", "bad path: " + prefix};
            auto names = std::vector<std::string> {};
            for (const auto& [name, _]: files.items())
            {
                if (name.starts_with(prefix))
                    names.push_back(name);
            }
            std::sort(names.begin(), names.end());
            return {Value {{"files", names}}, false};
        }

        throw ToolFailure {std::string(unknown_tool_label), "unknown tool " + call.tool};
    }

    [[nodiscard]] auto error_labels() const -> std::vector<std::pair<std::string, std::string>> override
    {
        return {{"no such file", "not_found"},
                {"permission denied", "permission_denied"},
                {"file exists", "already_exists"},
                {"bad path", "bad_path"}};
    }
};

} // namespace

auto make_fileio(const std::optional<Value>& initial_state) -> std::unique_ptr<Environment>
{
    auto state = initial_state.value_or(Value {
        {"files",
         Value {{"/home/user/notes.txt", Value {{"content", "meeting at 10"}, {"writable", true}}},
                {"/home/user/todo.txt", Value {{"content", "buy milk"}, {"writable", true}}},
                {"/etc/config.ini", Value {{"content", "mode=strict"}, {"writable", false}}}}}});
    if (!state.is_object() || !state.contains("files") || !state["files"].is_object())
        throw ConfigError("initial_state.files: fileio state must be an object with a \"files\" map");
    for (auto& [name, file]: state["files"].items())
    {
        if (!validPath(name))
            throw ConfigError("initial_state.files." + name + ": invalid path");
        if (!file.is_object() || !file.contains("content") || !file["content"].is_string())
            throw ConfigError("initial_state.files." + name + ": file needs a string \"content\"");
        if (!file.contains("writable"))
            file["writable"] = true;
    }
    return std::make_unique<FileStore>(std::move(state));
}

} // namespace atris
