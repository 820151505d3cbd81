// Fits the default parameters and writes the fixture. With --check, compares
// a fresh fit against an existing file instead and exits 1 on any difference.

#include "vre/calibration.hpp"
#include "vre/error.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
   CLI::App app{"Fit default timing and contention parameters", "vre-calibrate"};
   std::string output = "data/calibration.yaml";
   bool check = false;
   app.add_option("-o,--output", output, "Fixture path");
   app.add_flag("--check", check, "Verify the fixture instead of writing it");
   CLI11_PARSE(app, argc, argv);

   std::string text;
   try {
      auto fixture = vre::calib::calibrate(vre::calib::default_targets());
      text = vre::calib::render_fixture(fixture);
      for (const auto& o : fixture.provenance.targets)
         std::cerr << o.target.name << ": achieved " << vre::format_double(o.achieved) << ", residual "
                   << vre::format_double(o.residual) << "\n";
   } catch (const vre::Error& e) {
      std::cerr << "calibration failed: " << e.what() << "\n";
      return vre::exit_code_for(e.kind());
   }

   if (check) {
      std::ifstream in(output, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      if (!in || ss.str() != text) {
         std::cerr << output << " differs from a fresh calibration\n";
         return 1;
      }
      std::cerr << output << " is up to date\n";
      return 0;
   }
   std::ofstream out(output, std::ios::binary | std::ios::trunc);
   out << text;
   if (!out) {
      std::cerr << "cannot write " << output << "\n";
      return 1;
   }
   return 0;
}
