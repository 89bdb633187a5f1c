#include "minifed/minifed.hpp"
#include <gtest/gtest.h>
TEST(Placeholder, Builds) { SUCCEED(); }
