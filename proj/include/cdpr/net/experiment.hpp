#pragma once

#include <optional>
#include <vector>

#include "cdpr/net/controller.hpp"
#include "cdpr/net/gateway.hpp"
#include "cdpr/net/plant_server.hpp"

namespace cdpr::net {

/// One closed run: controller, optional gateway and plant as threads joined
/// by local socket pairs, speaking the same protocol as the standalone
/// servers. Without a gateway this is the direct ("local") loop; with one it
/// is the remote loop.
struct Experiment {
  RobotDescription robot;
  PlantConfig plant;
  std::optional<GatewayConfig> gateway;
  ControllerOptions controller;
};

/// Runs the experiment and returns the controller's log. Errors raised in
/// the plant or gateway threads are rethrown here.
LoopLog run_experiment(const Experiment& exp, const std::vector<Setpoint>& setpoints);

}  // namespace cdpr::net
