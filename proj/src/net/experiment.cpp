#include "cdpr/net/experiment.hpp"

#include <exception>
#include <thread>

#include "cdpr/error.hpp"

namespace cdpr::net {

LoopLog run_experiment(const Experiment& exp, const std::vector<Setpoint>& setpoints) {
  validate(exp.robot, exp.plant);
  auto ends = socket_pair();
  Stream ctrl_end = std::move(ends.first);
  Stream plant_side = std::move(ends.second);

  std::exception_ptr plant_error;
  std::exception_ptr gateway_error;
  std::optional<std::pair<Stream, Stream>> hop;
  Stream* plant_stream = &plant_side;
  if (exp.gateway) {
    hop.emplace(socket_pair());
    plant_stream = &hop->second;
  }

  std::thread plant([&, stream = plant_stream] {
    try {
      // Session-level failures reach the controller as ERROR frames.
      serve_plant_session(*stream, exp.robot, exp.plant);
    } catch (...) {
      plant_error = std::current_exception();
    }
    stream->shutdown_both();
  });

  std::thread gateway;
  if (exp.gateway) {
    gateway = std::thread([&] {
      try {
        run_gateway_session(plant_side, hop->first, *exp.gateway);
      } catch (...) {
        gateway_error = std::current_exception();
      }
      plant_side.shutdown_both();
      hop->first.shutdown_both();
    });
  }

  LoopLog log;
  std::exception_ptr controller_error;
  try {
    log = run_controller(ctrl_end, exp.robot, setpoints, exp.controller);
  } catch (...) {
    controller_error = std::current_exception();
  }
  ctrl_end.shutdown_both();
  if (gateway.joinable()) gateway.join();
  plant.join();

  if (controller_error) std::rethrow_exception(controller_error);
  if (plant_error) std::rethrow_exception(plant_error);
  if (gateway_error) std::rethrow_exception(gateway_error);
  return log;
}

}  // namespace cdpr::net
