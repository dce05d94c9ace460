use std::io::Write;

use poolsim::network::{Edge, Node};
use poolsim::{load_network, Network, NodeId};
use proptest::prelude::*;

fn grid() -> Network {
    Network::grid(6, 6, 500.0).unwrap()
}

/// Plain Bellman-Ford distances from `from` to every node.
fn bellman_ford(net: &Network, from: NodeId) -> Vec<f64> {
    let ids: Vec<NodeId> = net.node_ids().collect();
    let pos = |n: NodeId| ids.binary_search(&n).unwrap();
    let mut d = vec![f64::INFINITY; ids.len()];
    d[pos(from)] = 0.0;
    let edges = net.edges();
    for _ in 0..ids.len() {
        for e in &edges {
            let cand = d[pos(e.from)] + e.length;
            if cand < d[pos(e.to)] {
                d[pos(e.to)] = cand;
            }
        }
    }
    d
}

#[test]
fn distances_match_bellman_ford() {
    let net = Network::grid(4, 5, 250.0).unwrap();
    for (i, a) in net.node_ids().enumerate() {
        let oracle = bellman_ford(&net, a);
        for (j, b) in net.node_ids().enumerate() {
            assert_eq!(net.distance(a, b).unwrap(), oracle[j], "{i}->{j}");
        }
    }
}

#[test]
fn file_round_trip_matches_grid() {
    let g = Network::grid(3, 3, 500.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let nodes = dir.path().join("nodes.csv");
    let edges = dir.path().join("edges.csv");
    let mut w = std::fs::File::create(&nodes).unwrap();
    writeln!(w, "node_id,x_m,y_m").unwrap();
    for n in g.nodes() {
        writeln!(w, "{},{},{}", n.id, n.x, n.y).unwrap();
    }
    let mut w = std::fs::File::create(&edges).unwrap();
    write!(w, "from_id,to_id,length_m\r\n").unwrap();
    // reversed order and a longer duplicate of every edge
    for e in g.edges().iter().rev() {
        write!(w, "{},{},{}\r\n{},{},{}\r\n", e.from, e.to, e.length * 3.0, e.from, e.to, e.length).unwrap();
    }
    drop(w);
    let loaded = load_network(&nodes, &edges, 10.0).unwrap();
    assert_eq!(loaded.node_count(), 9);
    assert_eq!(loaded.edge_count(), 24);
    for a in g.node_ids() {
        for b in g.node_ids() {
            assert_eq!(loaded.shortest_path(a, b).unwrap(), g.shortest_path(a, b).unwrap());
        }
    }
}

#[test]
fn two_node_files() {
    let dir = tempfile::tempdir().unwrap();
    let nodes = dir.path().join("n.csv");
    let edges = dir.path().join("e.csv");
    std::fs::write(&nodes, "node_id,x_m,y_m\n1,0,0\n2,100.5,0\n").unwrap();
    std::fs::write(&edges, "from_id,to_id,length_m\n1,2,100.5\n2,1,100.5\n").unwrap();
    let net = load_network(&nodes, &edges, 10.0).unwrap();
    assert_eq!(net.node_count(), 2);
    assert_eq!(net.travel_time(NodeId(1), NodeId(2)).unwrap(), 10.05);

    std::fs::write(&edges, "from_id,to_id,length_m\n1,2,100.5\n2,7,100.5\n").unwrap();
    let err = load_network::<f64>(&nodes, &edges, 10.0).unwrap_err().to_string();
    assert!(err.contains('7') && err.contains(":3:"), "{err}");
}

#[test]
fn one_way_cycle_is_asymmetric() {
    let nodes = (0..3).map(|i| Node { id: NodeId(i), x: 0.0, y: 0.0 }).collect();
    let edges = vec![
        Edge { from: NodeId(0), to: NodeId(1), length: 1.0 },
        Edge { from: NodeId(1), to: NodeId(2), length: 1.0 },
        Edge { from: NodeId(2), to: NodeId(0), length: 1.0 },
    ];
    let net = Network::new(nodes, edges, 1.0).unwrap();
    assert_eq!(net.distance(NodeId(0), NodeId(2)).unwrap(), 2.0);
    assert_eq!(net.distance(NodeId(2), NodeId(0)).unwrap(), 1.0);
}

#[test]
fn single_precision_grid() {
    let g = Network::<f32>::grid(3, 3, 500.0).unwrap();
    let r = g.shortest_path(NodeId(0), NodeId(8)).unwrap();
    assert_eq!(r.length, 2000.0f32);
    assert_eq!(r.duration, 200.0f32);
}

fn node() -> impl Strategy<Value = NodeId> {
    (0u64..36).prop_map(NodeId)
}

proptest! {
    #[test]
    fn triangle_inequality(a in node(), b in node(), c in node()) {
        let g = grid();
        let ac = g.distance(a, c).unwrap();
        let ab = g.distance(a, b).unwrap();
        let bc = g.distance(b, c).unwrap();
        prop_assert!(ac <= ab + bc);
    }

    #[test]
    fn grid_routes_are_symmetric(a in node(), b in node()) {
        let g = grid();
        let fwd = g.shortest_path(a, b).unwrap();
        let back = g.shortest_path(b, a).unwrap();
        prop_assert_eq!(fwd.length, back.length);
        prop_assert_eq!(fwd.duration, back.duration);
    }

    #[test]
    fn route_consistency(a in node(), b in node(), edge in 1.0f64..2000.0, kmh in 5.0f64..120.0) {
        let g = Network::grid(6, 6, edge).unwrap().with_speed(kmh / 3.6).unwrap();
        let r = g.shortest_path(a, b).unwrap();
        prop_assert!((r.duration * g.speed() - r.length).abs() <= 4.0 * f64::EPSILON * r.length);
        prop_assert_eq!(r.nodes.first(), Some(&a));
        prop_assert_eq!(r.nodes.last(), Some(&b));
        let summed: f64 = r.nodes.windows(2).map(|w| g.distance(w[0], w[1]).unwrap()).sum();
        prop_assert_eq!(summed, r.length);
        prop_assert_eq!(g.shortest_path(a, b).unwrap(), r);
    }
}
