#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mopr/errors.hpp"
#include "mopr/evaluate.hpp"
#include "mopr/metrics.hpp"
#include "mopr/motion_clip.hpp"
#include "mopr/prior.hpp"
#include "mopr/rotation.hpp"
#include "mopr/sequence.hpp"
#include "mopr/signals.hpp"
#include "mopr/skeleton.hpp"
#include "mopr/synth.hpp"

namespace py = pybind11;
using namespace mopr;

namespace {

py::array_t<double> clip_rotations(const data::MotionClip& c) {
    const int T = c.n_frames(), J = c.n_joints();
    py::array_t<double> out({T, J, 6});
    auto r = out.mutable_unchecked<3>();
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < J; ++j)
            for (int k = 0; k < 6; ++k) r(t, j, k) = c.local_rot[t][j](k);
    return out;
}

py::array_t<double> clip_translation(const data::MotionClip& c) {
    const int T = c.n_frames();
    py::array_t<double> out({T, 3});
    auto r = out.mutable_unchecked<2>();
    for (int t = 0; t < T; ++t)
        for (int k = 0; k < 3; ++k) r(t, k) = c.root_translation[t](k);
    return out;
}

data::MotionClip clip_from_arrays(py::array_t<double> rot, py::array_t<double> trans,
                                  double fps, const std::string& label) {
    auto rr = rot.unchecked<3>();
    auto tr = trans.unchecked<2>();
    if (rr.shape(2) != 6) throw ShapeError("rotations must be (T, J, 6)");
    if (tr.shape(0) != rr.shape(0) || tr.shape(1) != 3)
        throw ShapeError("root translation must be (T, 3)");
    data::MotionClip c;
    c.fps = fps;
    c.action_label = label;
    const auto T = rr.shape(0), J = rr.shape(1);
    c.local_rot.resize(T, std::vector<kin::Rot6d>(J));
    c.root_translation.resize(T);
    for (py::ssize_t t = 0; t < T; ++t) {
        for (py::ssize_t j = 0; j < J; ++j)
            for (int k = 0; k < 6; ++k) c.local_rot[t][j](k) = rr(t, j, k);
        for (int k = 0; k < 3; ++k) c.root_translation[t](k) = tr(t, k);
    }
    c.validate();
    return c;
}

py::array_t<double> positions_array(const eval::Positions& pos) {
    const int T = static_cast<int>(pos.size());
    const int J = T > 0 ? static_cast<int>(pos[0].size()) : 0;
    py::array_t<double> out({T, J, 3});
    auto r = out.mutable_unchecked<3>();
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < J; ++j)
            for (int k = 0; k < 3; ++k) r(t, j, k) = pos[t][j](k);
    return out;
}

eval::Positions positions_from_array(py::array_t<double> a) {
    auto r = a.unchecked<3>();
    if (r.shape(2) != 3) throw ShapeError("positions must be (T, J, 3)");
    eval::Positions pos(r.shape(0), std::vector<Eigen::Vector3d>(r.shape(1)));
    for (py::ssize_t t = 0; t < r.shape(0); ++t)
        for (py::ssize_t j = 0; j < r.shape(1); ++j)
            pos[t][j] = Eigen::Vector3d(r(t, j, 0), r(t, j, 1), r(t, j, 2));
    return pos;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "full-body motion reconstruction from head and hand tracking";

    py::register_exception<mopr::Error>(m, "MoprError");

    py::class_<kin::SkeletonModel>(m, "Skeleton")
        .def_static("load", &kin::load_skeleton, py::arg("path"))
        .def_property_readonly("n_joints", &kin::SkeletonModel::n_joints)
        .def_readonly("parents", &kin::SkeletonModel::parents)
        .def_readonly("leg_joints", &kin::SkeletonModel::leg_joints)
        .def_readonly("head", &kin::SkeletonModel::head)
        .def_readonly("lhand", &kin::SkeletonModel::lhand)
        .def_readonly("rhand", &kin::SkeletonModel::rhand)
        .def("validate", &kin::SkeletonModel::validate, py::arg("canonical") = false)
        .def("hash", &kin::SkeletonModel::hash);

    py::class_<data::MotionClip>(m, "MotionClip")
        .def_static("load", &data::load_motion, py::arg("path"))
        .def_static("from_arrays", &clip_from_arrays, py::arg("rotations"),
                    py::arg("root_translation"), py::arg("fps") = 30.0,
                    py::arg("label") = "")
        .def("save", [](const data::MotionClip& c, const std::string& p) {
            data::save_motion(c, p);
        })
        .def_property_readonly("n_frames", &data::MotionClip::n_frames)
        .def_property_readonly("n_joints", &data::MotionClip::n_joints)
        .def_readonly("fps", &data::MotionClip::fps)
        .def_readonly("label", &data::MotionClip::action_label)
        .def("rotations", &clip_rotations)
        .def("root_translation", &clip_translation)
        .def("content_hash", [](const data::MotionClip& c) { return data::content_hash(c); });

    m.def("slice_clip", &data::slice_clip, py::arg("clip"), py::arg("start"), py::arg("len"));

    m.def(
        "rot6d_decode",
        [](const kin::Rot6d& v) -> Eigen::Matrix3d { return kin::rot6d_decode(v).matrix(); },
        py::arg("v"), "Gram-Schmidt a 6-vector back to a rotation matrix");
    m.def(
        "rot6d_encode",
        [](const Eigen::Matrix3d& r) -> kin::Rot6d {
            return kin::rot6d_encode(kin::Rotation(r));
        },
        py::arg("matrix"), "first two columns, column-major");

    m.def(
        "fk_positions",
        [](const kin::SkeletonModel& skel, const data::MotionClip& clip) {
            return positions_array(eval::fk_positions_clip(skel, clip));
        },
        py::arg("skeleton"), py::arg("clip"), "global joint positions, (T, J, 3) meters");

    m.def(
        "synth_dataset",
        [](const kin::SkeletonModel& skel, std::uint64_t seed,
           const std::vector<std::string>& classes, int clips_per_class, int n_frames,
           double fps) {
            data::SynthConfig cfg;
            cfg.classes = classes;
            cfg.clips_per_class = clips_per_class;
            cfg.n_frames = n_frames;
            cfg.fps = fps;
            cfg.validate();
            const auto& labels = classes.empty() ? data::synth_classes() : classes;
            const auto table = data::build_embedding_table(labels, seed);
            return data::synth_generate(skel, cfg, table, seed);
        },
        py::arg("skeleton"), py::arg("seed") = 1,
        py::arg("classes") = std::vector<std::string>{}, py::arg("clips_per_class") = 10,
        py::arg("n_frames") = 180, py::arg("fps") = 30.0);
    m.def("synth_classes", [] { return data::synth_classes(); });

    m.def(
        "mpjpe_cm",
        [](py::array_t<double> pred, py::array_t<double> gt,
           const std::optional<std::vector<int>>& joints) {
            const auto p = positions_from_array(pred), g = positions_from_array(gt);
            return eval::mpjpe_cm(p, g, joints ? &*joints : nullptr);
        },
        py::arg("pred"), py::arg("gt"), py::arg("joints") = std::nullopt);
    m.def(
        "mpjve_cm_per_s",
        [](py::array_t<double> pred, py::array_t<double> gt, double fps) {
            return eval::mpjve_cm_per_s(positions_from_array(pred),
                                           positions_from_array(gt), fps);
        },
        py::arg("pred"), py::arg("gt"), py::arg("fps"));
    m.def(
        "align_pelvis",
        [](py::array_t<double> pos) {
            return positions_array(eval::align_pelvis(positions_from_array(pos)));
        },
        py::arg("positions"));
    m.def(
        "fid",
        [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return eval::fid(a, b); },
        py::arg("a"), py::arg("b"), "rows are samples");

    py::class_<prior::FullMotionPrior>(m, "MotionPrior")
        .def_static("load", &prior::FullMotionPrior::load, py::arg("path"))
        .def_property_readonly("window_len",
                               [](const prior::FullMotionPrior& p) { return p.config().T; })
        .def_property_readonly(
            "latent_dim", [](const prior::FullMotionPrior& p) { return p.config().latent_dim; })
        .def("encode", &prior::FullMotionPrior::encode_full, py::arg("window"),
             "latent vector for an exactly window_len-frame clip");

    py::class_<prior::SparseMotionEncoder>(m, "SparseEncoder")
        .def_static("load", &prior::SparseMotionEncoder::load, py::arg("path"));

    py::class_<seq::SequenceModel>(m, "SequenceModel")
        .def_static("load", &seq::SequenceModel::load, py::arg("path"))
        .def_property_readonly("skeleton", &seq::SequenceModel::skeleton,
                               py::return_value_policy::reference_internal)
        .def(
            "reconstruct",
            [](const seq::SequenceModel& model, const data::MotionClip& tracked,
               const prior::SparseMotionEncoder* enc) {
                const auto raw =
                    sig::extract_sparse_signals(model.skeleton(), tracked);
                data::MotionClip pred = seq::infer_motion(model, enc, raw, tracked.fps);
                pred.action_label = tracked.action_label;
                return pred;
            },
            py::arg("tracked"), py::arg("encoder") = nullptr,
            "full-body reconstruction from the clip's head and hand signals");
}
