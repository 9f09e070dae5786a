use approx::assert_relative_eq;

use warpdisk::density::QuadSpec;
use warpdisk::plateau::{
    discrete_energy_with, fiber_region, minimize_energy, reference_map_energy, surgery_segment, CollapsedSetSpec, DiskMesh, EnergyMode,
    InitialMap, MapState, SolverConfig, TheodorsenConfig, WeightRule,
};

#[test]
fn mesh_and_state_survive_serialization() {
    let mesh = DiskMesh::rings(0.1).unwrap();
    let back = DiskMesh::from_text(&mesh.to_text()).unwrap();
    assert_eq!(back.triangles, mesh.triangles);
    assert_eq!(back.boundary, mesh.boundary);
    for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
        assert_relative_eq!(a[0], b[0], epsilon = 1e-15);
        assert_relative_eq!(a[1], b[1], epsilon = 1e-15);
    }

    let state = InitialMap::Mobius { a: 0.4 }.build(&mesh, 2.0).unwrap();
    let json = serde_json::to_string(&state).unwrap();
    let restored: MapState = serde_json::from_str(&json).unwrap();
    assert_eq!(restored, state);
    restored.validate(&mesh).unwrap();
}

#[test]
fn descent_from_a_mobius_start_converges_to_the_reference_energy() {
    let e = CollapsedSetSpec::point(2.0).unwrap();
    let p = reference_map_energy(&e, QuadSpec::default()).unwrap();
    let mut gaps = Vec::new();
    for h in [0.05, 0.025] {
        let mesh = DiskMesh::rings(h).unwrap();
        let init = InitialMap::Mobius { a: 0.5 }.build(&mesh, 2.0).unwrap();
        let rep = minimize_energy(&mesh, &e, &init, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        for w in rep.trace.windows(2) {
            assert!(w[1].dirichlet <= w[0].dirichlet, "energy increased: {} -> {}", w[0].dirichlet, w[1].dirichlet);
        }
        assert!(rep.steps.iter().all(|&s| s > 0.0));
        assert!(rep.energy.dirichlet < rep.initial.dirichlet);
        // the final state is what the report says it is
        let again = discrete_energy_with(&mesh, &rep.state, &e, WeightRule::VertexMean, EnergyMode::Dirichlet).unwrap();
        assert_relative_eq!(again.dirichlet, rep.energy.dirichlet, max_relative = 1e-12);
        gaps.push(rep.centroid_energy.reshetnyak / p - 1.0);
    }
    // first order in h
    assert!(gaps[1].abs() < 0.6 * gaps[0].abs(), "gaps {gaps:?}");
    assert!(gaps[1].abs() < 0.03, "gaps {gaps:?}");
}

#[test]
fn surgery_fiber_is_thin_while_the_minimizer_fiber_is_fat() {
    let mesh = DiskMesh::rings(0.02).unwrap();
    let e = CollapsedSetSpec::disk(1.0, 2.0).unwrap();
    let p = reference_map_energy(&e, QuadSpec::default()).unwrap();

    let cut = surgery_segment(&e, &mesh, &TheodorsenConfig::default()).unwrap();
    assert!(cut.boundary_residual < 1e-10);
    assert!((cut.energy.reshetnyak / p - 1.0).abs() < 0.05);
    let thin = fiber_region(&mesh, &cut.state, &e, 0.01, 400).unwrap();
    assert!(thin.connected);
    assert!(thin.inscribed_radius < 0.1);

    let init = InitialMap::Distorted { gamma: 1.2 }.build(&mesh, 2.0).unwrap();
    let rep = minimize_energy(&mesh, &e, &init, &SolverConfig::default()).unwrap();
    let fat = fiber_region(&mesh, &rep.state, &e, 0.01, 400).unwrap();
    assert!(fat.connected);
    assert!(fat.inscribed_radius > 4.0 * thin.inscribed_radius);
    assert!(fat.area > 10.0 * thin.area);
}

#[test]
fn invalid_inputs_are_rejected() {
    let mesh = DiskMesh::rings(0.1).unwrap();
    assert!(DiskMesh::rings(0.0).is_err());
    assert!(DiskMesh::from_text("not a mesh").is_err());
    assert!(InitialMap::Mobius { a: 1.0 }.build(&mesh, 2.0).is_err());
    assert!(InitialMap::Distorted { gamma: 0.0 }.build(&mesh, 2.0).is_err());
    let other = DiskMesh::rings(0.2).unwrap();
    let state = MapState::reference(&other, 2.0).unwrap();
    assert!(state.validate(&mesh).is_err());
}
