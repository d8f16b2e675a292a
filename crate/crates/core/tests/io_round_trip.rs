use cld::gen::{CostModel, EdgeModel, GeneratorSpec};
use cld::instance::InstanceFile;
use cld::reductions::{
    encode_3sat_to_bounded_max_length, encode_clique_to_cdv, encode_vc_to_bounded_power, encode_vc_to_cav,
    encode_vc_to_reachability_abstainers, CnfFormula, GadgetCertificate, SimpleGraph,
};

fn round_trip(f: &InstanceFile) -> InstanceFile {
    let (back, warnings) = InstanceFile::parse(&f.to_json(), false).unwrap();
    assert!(warnings.is_empty());
    back
}

#[test]
fn generated_instances_round_trip() {
    let models = [
        EdgeModel::UniformP { p: 0.3 },
        EdgeModel::Functional { q: 0.5 },
        EdgeModel::OutDegreeCapped { max_degree: 3 },
    ];
    let costs = [
        CostModel::Uniform { lo: 0, hi: 9 },
        CostModel::Correlated {
            lo: 0,
            hi: 4,
            offset_lo: -2,
            offset_hi: 2,
        },
    ];
    for seed in 0..40 {
        for model in models {
            for cost in costs {
                let e = GeneratorSpec::new(1 + seed as usize % 12, model, cost, seed).generate().unwrap();
                let f = InstanceFile::from_election(&e);
                let back = round_trip(&f);
                assert_eq!(back, f);
                assert_eq!(back.to_election().unwrap(), e);
            }
        }
    }
}

#[test]
fn gadget_instances_round_trip() {
    let f = CnfFormula::new(3, vec![vec![1, 2, 3], vec![-1, 2, -3]]).unwrap();
    let k4 = SimpleGraph::complete(4);
    let certs: Vec<GadgetCertificate> = vec![
        encode_3sat_to_bounded_max_length(&f, 3).unwrap(),
        encode_vc_to_bounded_power(&k4, 3, 5).unwrap(),
        encode_vc_to_reachability_abstainers(&SimpleGraph::cycle(5), 3),
        encode_vc_to_cav(&SimpleGraph::path(4), 2),
        encode_clique_to_cdv(&k4, 3).unwrap(),
    ];
    for cert in &certs {
        let file = InstanceFile::from_gadget(cert);
        let back = round_trip(&file);
        assert_eq!(back.to_election().unwrap(), cert.election);
        match back.control_instance().unwrap() {
            Some(ci) => {
                assert_eq!(Some(ci.designated), cert.params.designated);
                assert_eq!(Some(ci.k), cert.params.k);
                assert_eq!(ci.unregistered, cert.params.unregistered);
            }
            None => {
                let p = back.params.unwrap();
                assert_eq!((p.beta, p.ell, p.alpha), (cert.params.beta, cert.params.ell, cert.params.alpha));
            }
        }
    }
}
