// Guide screen: explore the assigned path in the panorama viewer while
// recording an instruction, then transcribe it and submit. The finished
// recording is encoded to WAV at stop and uploaded chunk by chunk in the
// background while the user types; submit unlocks only after the last
// chunk is acknowledged and the blob is finalized server-side.

import { PangeaClient, ApiError } from "../api.js";
import { PoseLogger } from "../poselog.js";
import { RecorderState } from "../recorder.js";
import { guideControls } from "../session.js";
import { encodeWavPcm16Mono, floatTo16 } from "../wav.js";
import {
	NavGraph, ViewerState, clickNeighbor, dragLook, parseGraph,
	projectMarkers, rayToEquirect, viewRay,
} from "../viewer.js";

const UPLOAD_CHUNK_BYTES = 64 * 1024;
const RENDER_W = 480;
const RENDER_H = 270;

let $ = (id: string) => document.getElementById(id)!;

class UploadQueue {
	private queue: { index: number; bytes: Uint8Array }[] = [];
	private busy = false;
	inFlight = 0;
	total = 0;
	onChunkDone: () => void = () => { };

	constructor(private client: PangeaClient, private sessionId: string) { }

	pushAll(wav: Uint8Array): void {
		for (let at = 0; at < wav.length; at += UPLOAD_CHUNK_BYTES) {
			this.queue.push({ index: this.total++, bytes: wav.subarray(at, at + UPLOAD_CHUNK_BYTES) });
			this.inFlight++;
		}
		void this.pump();
	}

	private async pump(): Promise<void> {
		if (this.busy) return;
		this.busy = true;
		while (this.queue.length > 0) {
			let item = this.queue[0];
			try {
				await this.client.uploadChunk(this.sessionId, item.index, item.bytes);
				this.queue.shift();
				this.inFlight--;
				this.onChunkDone();
			} catch {
				await new Promise(r => setTimeout(r, 1000));  // retry same chunk
			}
		}
		this.busy = false;
	}

	async idle(): Promise<void> {
		while (this.inFlight > 0) {
			await new Promise(r => setTimeout(r, 100));
		}
	}
}

// microphone capture at 16 kHz mono; samples accumulate client-side and
// become one WAV at stop (a streamed WAV header cannot know its final size)
class Capture {
	private ctx: AudioContext | null = null;
	private parts: Int16Array[] = [];
	active = false;

	async begin(): Promise<void> {
		let stream = await navigator.mediaDevices.getUserMedia({ audio: true });
		this.ctx = new AudioContext({ sampleRate: 16000 });
		let source = this.ctx.createMediaStreamSource(stream);
		let node = this.ctx.createScriptProcessor(4096, 1, 1);
		node.onaudioprocess = e => {
			if (!this.active) return;
			this.parts.push(floatTo16(new Float32Array(e.inputBuffer.getChannelData(0))));
		};
		source.connect(node);
		node.connect(this.ctx.destination);
	}

	finish(): Uint8Array {
		let total = this.parts.reduce((n, s) => n + s.length, 0);
		let joined = new Int16Array(total);
		let at = 0;
		for (let part of this.parts) {
			joined.set(part, at);
			at += part.length;
		}
		void this.ctx?.close();
		return encodeWavPcm16Mono(joined, 16000);
	}
}

async function main(): Promise<void> {
	let client = new PangeaClient("");
	let config = await client.config();
	let workerId = new URLSearchParams(location.search).get("worker")
		?? `guide-${Math.random().toString(36).slice(2, 8)}`;

	let session;
	try {
		session = await client.createSession(workerId, "guide");
	} catch (e) {
		banner(e instanceof ApiError && e.status === 409
			? "No guide tasks available right now." : String(e));
		return;
	}
	let sessionId = session.session_id;
	let payload = session.task.payload;
	let assignedPath: string[] = payload.path ?? [];
	let restricted: boolean = !!payload.restrict_movement;
	let env = session.task.environment_id;

	let graph: NavGraph = parseGraph(await client.graphDocument(env));
	let viewer: ViewerState = {
		node: assignedPath[0] ?? [...graph.nodes.keys()][0],
		headingRad: 0, pitchRad: 0,
	};
	let visited = new Set([viewer.node]);

	let epoch = performance.now();
	let logger = new PoseLogger(
		(seq, events) => client.postEvents(sessionId, seq, events),
		config.heartbeat_ms);
	let recorder = new RecorderState();
	let uploads = new UploadQueue(client, sessionId);
	uploads.onChunkDone = () => recorder.chunkUploaded();
	let capture = new Capture();
	let finalized = false;
	let serverState = session.state;

	let canvas = $("view") as HTMLCanvasElement;
	canvas.width = RENDER_W;
	canvas.height = RENDER_H;
	let ctx2d = canvas.getContext("2d")!;
	let panoImages = new Map<string, ImageData>();
	let imageBroken = false;

	async function loadPano(node: string): Promise<ImageData | null> {
		if (panoImages.has(node)) return panoImages.get(node)!;
		try {
			let img = new Image();
			img.src = client.panoramaUrl(env, node);
			await img.decode();
			let off = document.createElement("canvas");
			off.width = img.naturalWidth;
			off.height = img.naturalHeight;
			let octx = off.getContext("2d")!;
			octx.drawImage(img, 0, 0);
			let data = octx.getImageData(0, 0, off.width, off.height);
			panoImages.set(node, data);
			return data;
		} catch {
			return null;
		}
	}

	async function render(): Promise<void> {
		let pano = await loadPano(viewer.node);
		if (!pano) {
			imageBroken = true;
			banner("Panorama failed to load; movement disabled.");
			renderMarkers();
			return;
		}
		imageBroken = false;
		let out = ctx2d.createImageData(RENDER_W, RENDER_H);
		let aspect = RENDER_W / RENDER_H;
		for (let y = 0; y < RENDER_H; y++) {
			for (let x = 0; x < RENDER_W; x++) {
				let ray = viewRay((x + 0.5) / RENDER_W, (y + 0.5) / RENDER_H,
					viewer.headingRad, viewer.pitchRad, Math.PI / 2, aspect);
				let { u, v } = rayToEquirect(ray);
				let sx = Math.min(pano.width - 1, Math.floor(u * pano.width));
				let sy = Math.min(pano.height - 1, Math.floor(v * pano.height));
				let si = (sy * pano.width + sx) * 4;
				let di = (y * RENDER_W + x) * 4;
				out.data[di] = pano.data[si];
				out.data[di + 1] = pano.data[si + 1];
				out.data[di + 2] = pano.data[si + 2];
				out.data[di + 3] = 255;
			}
		}
		ctx2d.putImageData(out, 0, 0);
		renderMarkers();
	}

	function nextOnPath(): string | null {
		for (let node of assignedPath) {
			if (!visited.has(node)) return node;
		}
		return null;
	}

	function renderMarkers(): void {
		let layer = $("markers");
		layer.innerHTML = "";
		if (imageBroken) return;
		let highlight = restricted ? nextOnPath() : null;
		for (let marker of projectMarkers(graph, viewer)) {
			if (!marker.visible) continue;
			let el = document.createElement("button");
			el.className = "marker" + (marker.node === highlight ? " next" : "");
			el.textContent = marker.node;
			el.style.left = `${marker.screenX * 100}%`;
			el.style.top = `${marker.screenY * 100}%`;
			el.onclick = () => move(marker.node);
			layer.appendChild(el);
		}
	}

	function pose(): void {
		logger.update({
			node: viewer.node, headingRad: viewer.headingRad,
			pitchRad: viewer.pitchRad, audioTMs: null,
		}, performance.now() - epoch);
	}

	function move(target: string): void {
		if (imageBroken) return;
		let moved = clickNeighbor(graph, viewer, target);
		if (moved === viewer) return;  // not a neighbor: no movement
		viewer = moved;
		visited.add(viewer.node);
		if (serverState === "recording") pose();
		void render();
	}

	let dragging = false, lastX = 0, lastY = 0;
	canvas.addEventListener("pointerdown", e => {
		dragging = true;
		lastX = e.clientX;
		lastY = e.clientY;
	});
	window.addEventListener("pointerup", () => { dragging = false; });
	window.addEventListener("pointermove", e => {
		if (!dragging) return;
		let rect = canvas.getBoundingClientRect();
		viewer = dragLook(viewer,
			(e.clientX - lastX) / rect.width, (e.clientY - lastY) / rect.height);
		lastX = e.clientX;
		lastY = e.clientY;
		if (serverState === "recording") pose();
		void render();
	});

	setInterval(() => {
		if (serverState === "recording") logger.tick(performance.now() - epoch);
	}, 50);
	setInterval(() => { void logger.flush(); }, 500);
	setInterval(() => {
		$("elapsed").textContent = `${(recorder.elapsedMs() / 1000).toFixed(1)}s`;
		refreshButtons();
	}, 200);

	function refreshButtons(): void {
		let c = guideControls({
			serverState, finalized,
			uploadsInFlight: uploads.inFlight,
			transcript: ($("transcript") as HTMLTextAreaElement).value,
		});
		($("start") as HTMLButtonElement).disabled = !c.canStart;
		($("pause") as HTMLButtonElement).disabled = !c.canPause;
		($("resume") as HTMLButtonElement).disabled = !c.canResume;
		($("stop") as HTMLButtonElement).disabled = !c.canStop;
		($("submit") as HTMLButtonElement).disabled = !c.canSubmit;
		$("upload-note").textContent = finalized ? "audio uploaded"
			: `${uploads.inFlight} chunk(s) uploading`;
	}

	async function finalize(): Promise<void> {
		try {
			await client.finalizeAudio(sessionId, uploads.total);
			finalized = true;
			($("retry-finalize") as HTMLButtonElement).classList.add("hidden");
		} catch (e) {
			$("upload-note").textContent = `finalize failed: ${e}`;
			($("retry-finalize") as HTMLButtonElement).classList.remove("hidden");
		}
	}

	$("start").onclick = async () => {
		await capture.begin();
		serverState = (await client.action(sessionId, "start-recording")).state;
		recorder.start();
		capture.active = true;
		pose();
	};
	$("pause").onclick = async () => {
		serverState = (await client.action(sessionId, "pause")).state;
		recorder.pause();
		capture.active = false;
	};
	$("resume").onclick = async () => {
		serverState = (await client.action(sessionId, "resume")).state;
		recorder.resume();
		capture.active = true;
	};
	$("stop").onclick = async () => {
		serverState = (await client.action(sessionId, "stop-recording")).state;
		recorder.stop();
		capture.active = false;
		let wav = capture.finish();
		$("playback").setAttribute("src",
			URL.createObjectURL(new Blob([wav as BlobPart], { type: "audio/wav" })));
		$("transcribe-panel").classList.remove("hidden");
		uploads.pushAll(wav);   // uploads continue while the user types
		await logger.drain();
		await uploads.idle();
		await finalize();
	};
	$("retry-finalize").onclick = () => void finalize();
	$("submit").onclick = async () => {
		let text = ($("transcript") as HTMLTextAreaElement).value;
		await client.setTranscript(sessionId, text);
		let out = await client.submit(sessionId);
		serverState = "completed";
		banner(`Submitted. Annotation ${out.annotation_id}. Thank you!`);
	};

	$("task-line").textContent = restricted
		? `Follow the highlighted route: ${assignedPath.join(" → ")}`
		: "Walk a route of your choosing, describing it as you go.";
	await render();
	refreshButtons();
}

function banner(msg: string): void {
	let el = $("banner");
	el.textContent = msg;
	el.classList.remove("hidden");
}

main().catch(e => banner(String(e)));
