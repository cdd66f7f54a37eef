#include "doctest.h"
#include "properties/properties.hpp"

TEST_CASE("model property suite") {
    for (const auto& o : properties::run_all()) {
        INFO(o.name << ": " << o.detail);
        CHECK(o.pass);
    }
}
