use sarprior_web::{tau_curve, ViewRequest, Viewer};

#[test]
fn traces_and_renders_the_bundled_mesh() {
    let mut v = Viewer::aircraft();
    assert!(v.face_count() > 0);
    assert!(v.points().is_err());
    let n = v
        .trace(&ViewRequest {
            mc_rays: 3000,
            ..Default::default()
        })
        .unwrap();
    assert!(n > 0);

    let pts = v.points().unwrap();
    assert_eq!(pts.len(), 4 * n);
    assert!(pts.chunks(4).all(|p| p[2] > 0.0 && (1.0..=4.0).contains(&p[3])));

    let img = v.image_rgba(64, 32, true, false).unwrap();
    assert_eq!(img.len(), 64 * 32 * 4);
    assert!(img.chunks(4).any(|px| px[0] == 255));
    assert!(img.chunks(4).all(|px| px[3] == 255 && px[0] == px[1] && px[1] == px[2]));
    assert!(v.image_rgba(0, 32, false, false).is_err());
}

#[test]
fn same_request_gives_same_points() {
    let req = ViewRequest {
        mc_rays: 2000,
        azimuth_deg: 200.0,
        ..Default::default()
    };
    let (mut a, mut b) = (Viewer::aircraft(), Viewer::aircraft());
    a.trace(&req).unwrap();
    b.trace(&req).unwrap();
    assert_eq!(a.points().unwrap(), b.points().unwrap());
}

#[test]
fn rejects_bad_input() {
    assert!(Viewer::from_obj("v 0 0 0\nf 1 2 3\n").is_err());
    let mut v = Viewer::aircraft();
    assert!(v
        .trace(&ViewRequest {
            depression_deg: 95.0,
            ..Default::default()
        })
        .is_err());
    assert!(v
        .trace(&ViewRequest {
            zeta: 2.0,
            ..Default::default()
        })
        .is_err());
}

#[test]
fn tau_curve_follows_the_schedule() {
    let c = tau_curve(0.5, 0.8, 201).unwrap();
    assert_eq!(c.len(), 201);
    assert!(c.iter().all(|t| (0.0..=0.8).contains(t)));
    // nonincreasing in the similarity, zero from the target on
    assert!(c.windows(2).all(|w| w[1] <= w[0]));
    assert!(c[150..].iter().all(|&t| t == 0.0));
    assert!((c[0] - 0.75).abs() < 1e-12);
    assert!(tau_curve(0.5, 0.8, 1).is_err());
    assert!(tau_curve(0.5, 1.5, 10).is_err());
}
