#include <gtest/gtest.h>

#include <cmath>

#include "enthm/types.hpp"

using namespace enthm;

TEST(Timestamp, FormatsAndParsesIso) {
  const Timestamp t = make_timestamp(2010, 11, 21, 11, 55);
  EXPECT_EQ(format_iso(t), "2010-11-21T11:55");
  EXPECT_EQ(parse_iso("2010-11-21T11:55"), t);
  EXPECT_EQ(parse_iso("2010-11-21 11:55"), t);
  EXPECT_EQ(parse_iso("2010-11-21T11:55:00"), t);
  EXPECT_EQ(parse_iso("2010-11-21"), make_timestamp(2010, 11, 21));
}

TEST(Timestamp, RejectsMalformedText) {
  EXPECT_THROW(parse_iso("21/11/2010"), InvalidArgument);
  EXPECT_THROW(parse_iso("2010-13-01T00:00"), InvalidArgument);
  EXPECT_THROW(parse_iso("2010-02-30"), InvalidArgument);
  EXPECT_THROW(parse_iso("2010-11-21T25:00"), InvalidArgument);
  EXPECT_THROW(parse_iso("2010-11-21T10:00x"), InvalidArgument);
}

TEST(Timestamp, ShiftBackKeepsCalendarPosition) {
  EXPECT_EQ(shift_back_one_year(make_timestamp(2010, 11, 21, 10, 0)),
            make_timestamp(2009, 11, 21, 10, 0));
  // 2008 is a leap year; a fixed 525600-minute offset would land on 1 Mar.
  EXPECT_EQ(shift_back_one_year(make_timestamp(2009, 3, 1, 0, 0)), make_timestamp(2008, 3, 1));
  EXPECT_EQ(shift_back_one_year(make_timestamp(2008, 2, 29, 23, 59)),
            make_timestamp(2007, 2, 28, 23, 59));
}

TEST(CurrentLimits, EnforcesOrdering) {
  EXPECT_NO_THROW((CurrentLimits{0.0, 5.0, 30.0}.validate()));
  EXPECT_THROW((CurrentLimits{0.0, 30.0, 30.0}.validate()), InvalidArgument);
  EXPECT_THROW((CurrentLimits{5.0, 5.0, 30.0}.validate()), InvalidArgument);
  EXPECT_THROW((CurrentLimits{-1.0, 5.0, 30.0}.validate()), InvalidArgument);
  EXPECT_THROW((CurrentLimits{0.0, 5.0, NAN}.validate()), InvalidArgument);
}

TEST(Reading, RejectsNegativeAndNonFinite) {
  EXPECT_NO_THROW(validate(Reading{{}, 0.0}));
  EXPECT_THROW(validate(Reading{{}, -0.1}), InvalidArgument);
  EXPECT_THROW(validate(Reading{{}, INFINITY}), InvalidArgument);
  EXPECT_THROW(validate(Reading{{}, NAN}), InvalidArgument);
}
