// SPDX-License-Identifier: Apache-2.0
//
// `vault`: a ledger of named accounts.
//
//   balance(account)              -> {"balance": n}
//   transfer(src, dst, amount)    -> {"status": "ok", "src_balance": n, "dst_balance": m}
//   deposit(account, amount)      -> {"balance": n}
//   withdraw(account, amount)     -> {"balance": n}
//   open_account(name)            -> {"account": name, "balance": 0}
//   list_accounts()               -> {"accounts": [...]}
//
// Failure modes (checked in this order): unknown account, invalid amount
// (not > 0), insufficient funds, account already exists.
#include <atris/environment.hpp>

namespace atris
{

namespace
{

auto vaultTools() -> const std::vector<ToolSpec>&
{
    static const auto tools = std::vector<ToolSpec> {
        {"balance", "Return the current balance of an account.", {{"account", "string", true, "Account name."}}},
        {"transfer",
         "Move funds from one account to another. Fails when the source balance is too low.",
         {{"src", "string", true, "Source account."},
          {"dst", "string", true, "Destination account."},
          {"amount", "number", true, "Positive amount to move."}}},
        {"deposit",
         "Add funds to an account.",
         {{"account", "string", true, "Account name."}, {"amount", "number", true, "Positive amount to add."}}},
        {"withdraw",
         "Remove funds from an account. Fails when the balance is too low.",
         {{"account", "string", true, "Account name."}, {"amount", "number", true, "Positive amount to remove."}}},
        {"open_account", "Open a new account with a zero balance.", {{"name", "string", true, "New account name."}}},
        {"list_accounts", "List all account names.", {}},
    };
    return tools;
}

/// Adds two JSON numbers, staying integral when both are integral.
auto addAmounts(const Value& a, const Value& b) -> Value
{
    if (a.is_number_integer() && b.is_number_integer())
        return Value(a.get<std::int64_t>() + b.get<std::int64_t>());
    return Value(a.get<double>() + b.get<double>());
}

auto negate(const Value& v) -> Value
{
    if (v.is_number_integer())
        return Value(-v.get<std::int64_t>());
    return Value(-v.get<double>());
}

class Vault final : public Environment
{
  public:
    explicit Vault(Value initial): Environment(std::move(initial)) {}

    [[nodiscard]] auto id() const -> std::string_view override { return "vault"; }
    [[nodiscard]] auto tools() const -> const std::vector<ToolSpec>& override { return vaultTools(); }

    [[nodiscard]] auto failure_labels() const -> std::vector<std::string> override
    {
        return {"insufficient_funds", "unknown_account", "invalid_amount", "account_exists",
                std::string(unknown_tool_label), std::string(bad_argument_label)};
    }

    [[nodiscard]] auto implementation_notes(std::string_view tool) const -> std::string override
    {
        auto const common = std::string(
            "Accounts are looked up by exact name; an unknown name fails with \"unknown account <name>\". "
            "Amounts must be numbers strictly greater than zero, otherwise \"invalid amount: <amount>\". "
            "Arguments of the wrong type fail with \"bad argument type: ...\".");
        if (tool == "transfer")
            return "transfer(src, dst, amount): checks both accounts exist, then the amount, then fails with "
                   "\"insufficient funds\" when balance(src) < amount; otherwise moves the funds. "
                   + common;
        if (tool == "withdraw")
            return "withdraw(account, amount): fails with \"insufficient funds\" when balance < amount. " + common;
        if (tool == "deposit")
            return "deposit(account, amount): adds amount to the account. " + common;
        if (tool == "balance")
            return "balance(account): returns {\"balance\": n}. " + common;
        if (tool == "open_account")
            return "open_account(name): fails with \"account already exists: <name>\" when the name is taken; "
                   "an empty name fails with \"bad argument: name must be non-empty\".";
        if (tool == "list_accounts")
            return "list_accounts(): returns every account name in sorted order; never fails.";
        return "no such tool; calling it fails with \"unknown tool <name>\".";
    }

    [[nodiscard]] auto clone() const -> std::unique_ptr<Environment> override { return std::make_unique<Vault>(*this); }

  protected:
    auto apply(const ToolCall& call, Value& state) const -> Applied override
    {
        auto& accounts = state["accounts"];
        auto account = [&](const char* arg) -> Value& {
            auto const& name = call.arg(arg)->get_ref<const std::string&>();
            if (!accounts.contains(name))
                throw ToolFailure {"unknown_account", "unknown account " + name};
            return accounts[name];
        };
        auto amount = [&]() -> const Value& {
            auto const& v = *call.arg("amount");
            if (!(v.get<double>() > 0))
                throw ToolFailure {"invalid_amount", "invalid amount: " + render_literal(v)};
            return v;
        };

        if (call.tool == "balance")
            return {Value {{"balance", account("account")}}, false};

        if (call.tool == "transfer")
        {
            auto& src = account("src");
            auto& dst = account("dst");
            auto const& amt = amount();
            if (src.get<double>() < amt.get<double>())
                throw ToolFailure {"insufficient_funds", "insufficient funds"};
            src = addAmounts(src, negate(amt));
            dst = addAmounts(dst, amt);
            auto const& srcAfter = accounts[call.arg("src")->get<std::string>()];
            auto const& dstAfter = accounts[call.arg("dst")->get<std::string>()];
            return {Value {{"status", "ok"}, {"src_balance", srcAfter}, {"dst_balance", dstAfter}}, true};
        }

        if (call.tool == "deposit")
        {
            auto& acc = account("account");
            acc = addAmounts(acc, amount());
            return {Value {{"balance", acc}}, true};
        }

        if (call.tool == "withdraw")
        {
            auto& acc = account("account");
            auto const& amt = amount();
            if (acc.get<double>() < amt.get<double>())
                throw ToolFailure {"insufficient_funds", "insufficient funds"};
            acc = addAmounts(acc, negate(amt));
            return {Value {{"balance", acc}}, true};
        }

        if (call.tool == "open_account")
        {
            auto const& name = call.arg("name")->get_ref<const std::string&>();
            if (name.empty())
                throw ToolFailure {std::string(bad_argument_label), "bad argument: name must be non-empty"};
            if (accounts.contains(name))
                throw ToolFailure {"account_exists", "account already exists: " + name};
            accounts[name] = 0;
            return {Value {{"account", name}, {"balance", 0}}, true};
        }

        if (call.tool == "list_accounts")
        {
            auto names = std::vector<std::string> {};
            for (const auto& [name, _]: accounts.items())
                names.push_back(name);
            std::sort(names.begin(), names.end());
            return {Value {{"accounts", names}}, false};
        }

        throw ToolFailure {std::string(unknown_tool_label), "unknown tool " + call.tool};
    }

    [[nodiscard]] auto error_labels() const -> std::vector<std::pair<std::string, std::string>> override
    {
        return {{"insufficient funds", "insufficient_funds"},
                {"unknown account ", "unknown_account"},
                {"invalid amount", "invalid_amount"},
                {"account already exists", "account_exists"}};
    }
};

} // namespace

auto make_vault(const std::optional<Value>& initial_state) -> std::unique_ptr<Environment>
{
    auto state = initial_state.value_or(Value {{"accounts", Value {{"A", 100}, {"B", 0}}}});
    if (!state.is_object() || !state.contains("accounts") || !state["accounts"].is_object())
        throw ConfigError("initial_state.accounts: vault state must be an object with an \"accounts\" map");
    for (const auto& [name, balance]: state["accounts"].items())
    {
        if (!balance.is_number())
            throw ConfigError("initial_state.accounts." + name + ": balance must be a number");
    }
    return std::make_unique<Vault>(std::move(state));
}

} // namespace atris
