#pragma once

#include <stdexcept>
#include <string>

namespace tsg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TSG_DEFINE_ERROR(Name)            \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  };

TSG_DEFINE_ERROR(SchemaError)
TSG_DEFINE_ERROR(ValidationError)
TSG_DEFINE_ERROR(ConfigError)
TSG_DEFINE_ERROR(PoseOffMap)
TSG_DEFINE_ERROR(RobotNotOnNode)
TSG_DEFINE_ERROR(RobotNotInFreeSpace)
TSG_DEFINE_ERROR(DegenerateCluster)
TSG_DEFINE_ERROR(MissingVariable)
TSG_DEFINE_ERROR(SingularSystem)
TSG_DEFINE_ERROR(UnboundedRoom)
TSG_DEFINE_ERROR(OpenTrajectory)

#undef TSG_DEFINE_ERROR

}  // namespace tsg
