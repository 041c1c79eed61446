#include "egpi/model.hpp"

namespace egpi {

EgpiTrace evaluate(HysteresisModel& model, const Trajectory& input, double w_init)
{
    if (auto* gpi = std::get_if<GpiModel>(&model)) {
        EgpiTrace out;
        out.z = gpi_eval(*gpi, input, w_init);
        out.z1 = out.z;
        out.z2 = out.z;
        out.active.assign(out.z.size(), 1);
        return out;
    }
    return egpi_eval(std::get<EgpiModel>(model), input, w_init);
}

}  // namespace egpi
