import { ApiClient } from "./api";
import { ChatViewModel } from "./model";
import { mountChat } from "./view";

const client = new ApiClient("");
const model = new ChatViewModel(client);
const root = document.getElementById("app");
if (root === null) {
    throw new Error("missing #app container");
}
mountChat(root, model);

void (async () => {
    try {
        const info = await client.info();
        await model.startSession(info.default_corpus, info.default_policy);
    } catch {
        await model.startSession();
    }
})();
