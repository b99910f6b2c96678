#include <catch2/catch_amalgamated.hpp>

#include "nets.hpp"
#include "snc/tree.hpp"

using namespace snc;
using namespace testutil;

namespace {
const ArrivalModel kExp = ArrivalModel::exponential(1.5);
}

TEST_CASE("validate accepts the interleaved tandem") {
    CHECK(validate(interleaved_tandem(kExp)).empty());
}

TEST_CASE("validate rejects broken networks") {
    SECTION("flow skipping a declared link") {
        auto net = interleaved_tandem(kExp);
        net.links = {{"1", "2"}, {"2", "3"}};
        net.flows.push_back({"skip", {"1", "3"}, kExp, {}, nullptr, ""});
        const auto bad = validate(net);
        REQUIRE_FALSE(bad.empty());
        CHECK(bad.front().find("skips a link") != std::string::npos);
    }
    SECTION("cyclic routing") {
        auto net = interleaved_tandem(kExp);
        net.flows.push_back({"cyc", {"3", "1"}, kExp, {}, nullptr, ""});
        const auto bad = validate(net);
        REQUIRE_FALSE(bad.empty());
        CHECK(bad.front().find("cycle") != std::string::npos);
    }
    SECTION("revisiting a server") {
        auto net = interleaved_tandem(kExp);
        net.flows.push_back({"loop", {"1", "2", "1"}, kExp, {}, nullptr, ""});
        CHECK_FALSE(validate(net).empty());
    }
    SECTION("duplicate ids and missing foi") {
        auto net = interleaved_tandem(kExp);
        net.servers.push_back({"1", ServiceModel::constant_rate(1.0)});
        net.foi = "nope";
        const auto bad = validate(net);
        CHECK(bad.size() >= 2);
    }
    SECTION("diamond is a valid feedforward network") {
        CHECK(validate(diamond(kExp)).empty());
    }
}

TEST_CASE("tree reduction of the interleaved tandem") {
    const auto result = tree_reduce(interleaved_tandem(kExp));
    REQUIRE(tree_reducible(result));
    const auto& tree = std::get<ReducedTree>(result);
    CHECK(tree.root == "3");
    CHECK(tree.successor.at("1") == "2");
    CHECK(tree.successor.at("2") == "3");
    CHECK(tree.flows.size() == 3);
    CHECK(tree.servers.size() == 3);
    // Crossing sets: {1,2} at server 1, {1,2,3} at 2, {1,3} at 3.
    CHECK(tree.crossing.at("1").size() == 2);
    CHECK(tree.crossing.at("2").size() == 3);
    CHECK(tree.crossing.at("3").size() == 2);
}

TEST_CASE("tree reduction of the small tree network") {
    const auto result = tree_reduce(small_tree(kExp));
    REQUIRE(tree_reducible(result));
    const auto& tree = std::get<ReducedTree>(result);
    CHECK(tree.root == "3");
    CHECK(tree.successor.at("1") == "3");
    CHECK(tree.successor.at("2") == "3");
}

TEST_CASE("diamond is not tree-reducible") {
    const auto result = tree_reduce(diamond(kExp));
    REQUIRE_FALSE(tree_reducible(result));
    const auto& witness = std::get<NotTreeReducible>(result);
    CHECK(witness.diverge_server == "0");
    CHECK(witness.rejoin_server == "3");
    CHECK(witness.message.find("rejoin") != std::string::npos);
}

TEST_CASE("non-interacting flows and empty servers are dropped") {
    auto net = interleaved_tandem(kExp);
    net.servers.push_back({"9", ServiceModel::constant_rate(5.0)});
    net.flows.push_back({"iso", {"9"}, kExp, {}, nullptr, ""});
    const auto result = tree_reduce(net);
    REQUIRE(tree_reducible(result));
    const auto& tree = std::get<ReducedTree>(result);
    CHECK(tree.flows.size() == 3);
    CHECK(tree.servers.size() == 3);
    for (const auto& s : tree.servers) CHECK(s.id != "9");
}

TEST_CASE("cross flows truncate after their last indirect interaction") {
    // Route flow 3 through private server 7 before it reaches the foi path;
    // flow y shares only server 7 with it. y interacts indirectly (through
    // flow 3) and must survive truncated to <7>; flow x's tail through
    // private server 8 beyond its last interaction is cut.
    auto net = interleaved_tandem(kExp);
    net.servers.push_back({"7", ServiceModel::constant_rate(5.0)});
    net.servers.push_back({"8", ServiceModel::constant_rate(5.0)});
    net.flows[2].path = {"7", "2", "3"};
    net.flows.push_back({"y", {"7"}, kExp, {}, nullptr, ""});
    net.flows.push_back({"x", {"2", "8"}, kExp, {}, nullptr, ""});
    const auto result = tree_reduce(net);
    REQUIRE(tree_reducible(result));
    const auto& tree = std::get<ReducedTree>(result);
    bool found_y = false, found_x = false;
    for (const auto& f : tree.flows) {
        if (f.id == "y") {
            found_y = true;
            CHECK(f.path == std::vector<std::string>{"7"});
        }
        if (f.id == "x") {
            found_x = true;
            CHECK(f.path == std::vector<std::string>{"2"});
        }
    }
    CHECK(found_y);
    CHECK(found_x);
    for (const auto& s : tree.servers) CHECK(s.id != "8");
}

TEST_CASE("tree reduction is idempotent") {
    auto net = interleaved_tandem(kExp);
    net.servers.push_back({"9", ServiceModel::constant_rate(5.0)});
    net.flows.push_back({"iso", {"9"}, kExp, {}, nullptr, ""});
    const auto first = tree_reduce(net);
    REQUIRE(tree_reducible(first));
    const auto& t1 = std::get<ReducedTree>(first);
    const auto second = tree_reduce(to_network(t1));
    REQUIRE(tree_reducible(second));
    const auto& t2 = std::get<ReducedTree>(second);
    REQUIRE(t1.flows.size() == t2.flows.size());
    for (std::size_t i = 0; i < t1.flows.size(); ++i) {
        CHECK(t1.flows[i].id == t2.flows[i].id);
        CHECK(t1.flows[i].path == t2.flows[i].path);
    }
    CHECK(t1.root == t2.root);
    CHECK(t1.successor == t2.successor);
}

TEST_CASE("reduced tree invariants") {
    for (const Network& net : {interleaved_tandem(kExp), small_tree(kExp),
                               tree_case_study(kExp), canonical_tandem(kExp, 4, 4.0)}) {
        const auto result = tree_reduce(net);
        REQUIRE(tree_reducible(result));
        const auto& tree = std::get<ReducedTree>(result);
        for (const auto& s : tree.servers) {
            std::string u = s.id;
            int hops = 0;
            while (u != tree.root && hops++ < 100) u = tree.successor.at(u);
            CHECK(u == tree.root);
        }
        for (const auto& f : tree.flows)
            for (std::size_t i = 0; i + 1 < f.path.size(); ++i)
                CHECK(tree.successor.at(f.path[i]) == f.path[i + 1]);
        CHECK(tree.foi_path().back() == tree.root);
    }
}
