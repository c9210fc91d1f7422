#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "pilotwave/wavefield.hpp"

namespace pilotwave::wavefield {

using nlohmann::json;

void write_wavefunction(const GridWaveFunction& psi, const std::string& prefix) {
  json meta;
  meta["spin_dim"] = psi.spin_dim();
  meta["time"] = psi.time();
  for (const auto& a : psi.grid().axes()) meta["axes"].push_back({{"min", a.min}, {"max", a.max}, {"points", a.points}});
  std::ofstream js(prefix + ".json");
  if (!js) throw Error("cannot write " + prefix + ".json");
  js << meta.dump(2) << '\n';

  std::ofstream csv(prefix + ".csv");
  if (!csv) throw Error("cannot write " + prefix + ".csv");
  csv << std::setprecision(17);
  const auto& grid = psi.grid();
  csv << "component";
  for (std::size_t k = 0; k < grid.ndim(); ++k) csv << ",i" << k;
  csv << ",re,im\n";
  for (std::size_t c = 0; c < psi.spin_dim(); ++c)
    for (std::size_t f = 0; f < grid.size(); ++f) {
      const auto idx = grid.unflat(f);
      csv << c << ',' << idx[0];
      if (grid.ndim() == 2) csv << ',' << idx[1];
      csv << ',' << psi.at(c, f).real() << ',' << psi.at(c, f).imag() << '\n';
    }
}

GridWaveFunction read_wavefunction(const std::string& prefix) {
  std::ifstream js(prefix + ".json");
  if (!js) throw ValidationError("cannot open " + prefix + ".json");
  GridSpec grid;
  std::size_t spin_dim = 0;
  double time = 0.0;
  try {
    const json meta = json::parse(js);
    std::vector<Axis> axes;
    for (const auto& a : meta.at("axes"))
      axes.push_back({a.at("min").get<double>(), a.at("max").get<double>(), a.at("points").get<std::size_t>()});
    grid = GridSpec(std::move(axes));
    spin_dim = meta.at("spin_dim").get<std::size_t>();
    time = meta.at("time").get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(prefix + ".json: " + e.what());
  }

  std::ifstream csv(prefix + ".csv");
  if (!csv) throw ValidationError("cannot open " + prefix + ".csv");
  std::vector<Complex> samples(grid.size() * spin_dim);
  std::vector<bool> seen(samples.size(), false);
  std::string line;
  std::getline(csv, line);  // header
  std::size_t row = 0;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    ++row;
    std::istringstream is(line);
    std::vector<std::string> cells;
    for (std::string cell; std::getline(is, cell, ',');) cells.push_back(cell);
    if (cells.size() != grid.ndim() + 3) throw ValidationError(prefix + ".csv: malformed row " + std::to_string(row));
    try {
      const std::size_t c = std::stoul(cells[0]);
      const std::size_t i0 = std::stoul(cells[1]);
      const std::size_t i1 = grid.ndim() == 2 ? std::stoul(cells[2]) : 0;
      if (c >= spin_dim || i0 >= grid.axis(0).points || (grid.ndim() == 2 && i1 >= grid.axis(1).points))
        throw ValidationError(prefix + ".csv: index out of range in row " + std::to_string(row));
      const std::size_t j = c * grid.size() + grid.flat(i0, i1);
      samples[j] = {std::stod(cells[grid.ndim() + 1]), std::stod(cells[grid.ndim() + 2])};
      seen[j] = true;
    } catch (const std::logic_error&) {
      throw ValidationError(prefix + ".csv: unreadable number in row " + std::to_string(row));
    }
  }
  for (bool s : seen)
    if (!s) throw ValidationError(prefix + ".csv: missing samples");
  return GridWaveFunction(grid, spin_dim, std::move(samples), time);
}

}  // namespace pilotwave::wavefield
